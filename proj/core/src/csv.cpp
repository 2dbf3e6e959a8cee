#include "prunebench/csv.hpp"

#include <fstream>
#include <sstream>

namespace prunebench {

void CsvWriter::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw IoError("CSV is missing column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string tok;
        std::stringstream ss(line);
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        return fields;
    };

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty CSV");
    table.header = split(line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != table.header.size()) {
            throw IoError(path.string() + ": row " + std::to_string(row) + " has " +
                          std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

double csv_double(const std::string& field) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw IoError("bad numeric CSV field '" + field + "'");
    }
    return v;
}

std::uint64_t csv_u64(const std::string& field) {
    std::uint64_t v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw IoError("bad integer CSV field '" + field + "'");
    }
    return v;
}

}  // namespace prunebench
