#include "strack/telemetry/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace strack::telemetry {

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary) {
    if (!out_) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (const auto& h : header) {
        field(h);
    }
    end_row();
}

void CsvWriter::sep() {
    if (!first_) {
        out_ << ',';
    }
    first_ = false;
}

CsvWriter& CsvWriter::field(const std::string& v) {
    sep();
    if (v.find_first_of(",\"\n\r") == std::string::npos) {
        out_ << v;
    } else {
        out_ << '"';
        for (char c : v) {
            if (c == '"') {
                out_ << '"';
            }
            out_ << c;
        }
        out_ << '"';
    }
    return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(double v, int decimals) {
    sep();
    out_ << format_fixed(v, decimals);
    return *this;
}

void CsvWriter::end_row() {
    out_ << "\r\n";
    first_ = true;
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) {
        throw std::runtime_error("write failed for " + path_.string());
    }
    out_.close();
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw std::runtime_error("CSV has no column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string cur;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cur));
            cur.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            if (any || !cur.empty()) {
                row.push_back(std::move(cur));
                records.push_back(std::move(row));
            }
            row.clear();
            cur.clear();
            any = false;
        } else {
            cur += c;
            any = true;
        }
    }
    if (quoted) {
        throw std::runtime_error("unterminated quoted CSV field");
    }
    if (any || !cur.empty()) {
        row.push_back(std::move(cur));
        records.push_back(std::move(row));
    }
    CsvTable t;
    if (records.empty()) {
        return t;
    }
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) {
            throw std::runtime_error("CSV row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                                     " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace strack::telemetry
