#include "relaxo/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace relaxo {

std::string format_full(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    // %.17g is the shortest format guaranteed to round-trip a double.
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
}

void CsvWriter::header(const std::string& line) { out_ << line << '\n'; }

void CsvWriter::raw(const std::string& line) { out_ << line << '\n'; }

CsvWriter& CsvWriter::field(double v) {
    if (row_open_) out_ << ',';
    out_ << format_full(v);
    row_open_ = true;
    return *this;
}

CsvWriter& CsvWriter::field(const std::string& v) {
    if (row_open_) out_ << ',';
    out_ << v;
    row_open_ = true;
    return *this;
}

CsvWriter& CsvWriter::field(long long v) {
    if (row_open_) out_ << ',';
    out_ << v;
    row_open_ = true;
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    row_open_ = false;
}

int CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        out.push_back(cur);
        return out;
    };

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path.string());
    table.columns = split(line);

    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split(line);
        if (fields.size() != table.columns.size())
            throw std::runtime_error("malformed CSV row in " + path.string() + ": " + line);
        table.rows.push_back(std::move(fields));
    }
    return table;
}

}  // namespace relaxo
