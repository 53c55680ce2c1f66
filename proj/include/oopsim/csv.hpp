#pragma once
#include <string>
#include <vector>

namespace oopsim {

// Minimal RFC-4180 CSV support: quoted fields, embedded commas/quotes,
// CRLF or LF line ends. Enough for the panel/population/pmf files.

std::string csv_escape(const std::string& field);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
    int require_column(const std::string& name, const std::string& file) const;
};

CsvTable read_csv(const std::string& path);

double to_double(const std::string& s, const std::string& context);
long long to_int(const std::string& s, const std::string& context);

// money fields are serialized with 2 decimals
std::string money_str(double v);

}  // namespace oopsim
