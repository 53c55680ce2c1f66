#include "oopsim/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "oopsim/errors.hpp"

namespace oopsim {

std::string csv_escape(const std::string& field) {
    bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

int CsvTable::require_column(const std::string& name, const std::string& file) const {
    int idx = column(name);
    if (idx < 0) throw IoError(file + ": missing required column '" + name + "'");
    return idx;
}

namespace {

std::vector<std::string> parse_line(const std::string& content, std::size_t& pos) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    bool any = false;
    while (pos < content.size()) {
        char c = content[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < content.size() && content[pos + 1] == '"') {
                    cur += '"';
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
            any = true;
        } else if (c == '\n') {
            ++pos;
            break;
        } else if (c == '\r') {
            // swallow; newline handled next iteration
        } else {
            cur += c;
            any = true;
        }
        ++pos;
    }
    if (any || !cur.empty()) fields.push_back(cur);
    return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();

    CsvTable table;
    std::size_t pos = 0;
    table.header = parse_line(content, pos);
    if (table.header.empty()) throw IoError(path + ": empty file");
    while (pos < content.size()) {
        auto row = parse_line(content, pos);
        if (row.empty()) continue;
        if (row.size() != table.header.size())
            throw IoError(path + ": row with " + std::to_string(row.size()) +
                          " fields, expected " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

double to_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(context + ": cannot parse '" + s + "' as a number");
    }
}

long long to_int(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(context + ": cannot parse '" + s + "' as an integer");
    }
}

std::string money_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

}  // namespace oopsim
