#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace strack::telemetry {

/// Version stamped into the first column of every CSV file.
inline constexpr int kSchemaVersion = 1;

/// Minimal RFC 4180 writer. Fields containing a comma, quote or newline are
/// quoted. Throws std::runtime_error naming the path on I/O failure.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& field(const std::string& v);
    CsvWriter& field(std::uint64_t v);
    CsvWriter& field(std::int64_t v);
    CsvWriter& field(double v, int decimals = 6);
    void end_row();
    void close();

private:
    void sep();

    std::filesystem::path path_;
    std::ofstream out_;
    bool first_ = true;
};

/// Rows as name -> value maps; the header row supplies the names.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

std::string format_fixed(double v, int decimals = 6);

}  // namespace strack::telemetry
