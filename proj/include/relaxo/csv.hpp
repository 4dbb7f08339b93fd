#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace relaxo {

/// Shortest round-trip decimal form of a double (up to 17 significant digits).
std::string format_full(double v);

/// Minimal CSV emitter: comma delimiter, '.' decimal point, LF endings, UTF-8.
/// Doubles are written with format_full so files round-trip bit exactly.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    void header(const std::string& line);
    void raw(const std::string& line);

    CsvWriter& field(double v);
    CsvWriter& field(const std::string& v);
    CsvWriter& field(long long v);
    void end_row();

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    bool row_open_ = false;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;
};

/// Parses a simple CSV file (no quoting; the formats this tool reads and
/// writes never need it). Throws std::runtime_error on malformed input.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace relaxo
