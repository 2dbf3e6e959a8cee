#pragma once

// Tiny CSV helpers. Doubles are written with std::to_chars (shortest
// round-trip form), so output is byte-deterministic and lossless.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prunebench/common.hpp"

namespace prunebench {

inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
  public:
    explicit CsvWriter(std::string header) { buf_ = std::move(header) += '\n'; }

    CsvWriter& field(const std::string& v) {
        sep();
        buf_ += v;
        return *this;
    }
    CsvWriter& field(double v) { return field(fmt_double(v)); }
    CsvWriter& field(std::uint64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(std::int64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }

    void end_row() {
        buf_ += '\n';
        row_open_ = false;
    }

    const std::string& str() const { return buf_; }
    void write(const std::filesystem::path& path) const;

  private:
    void sep() {
        if (row_open_) buf_ += ',';
        row_open_ = true;
    }
    std::string buf_;
    bool row_open_ = false;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const;  // throws IoError if missing
};

/// Strict reader: every row must have exactly as many fields as the header.
CsvTable read_csv(const std::filesystem::path& path);

double csv_double(const std::string& field);
std::uint64_t csv_u64(const std::string& field);

}  // namespace prunebench
