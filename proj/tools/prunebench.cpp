#include "prunebench/cli.hpp"

int main(int argc, char** argv) {
    return prunebench::cli::run_cli(argc, argv);
}
