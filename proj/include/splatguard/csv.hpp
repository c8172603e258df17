// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
// Minimal CSV tables: comma separated, no quoting, first line is the header.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace splatguard {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws Format when absent.
    std::size_t column(const std::string &name) const;
    std::string to_string() const;
};

CsvTable parse_csv(const std::string &text);
CsvTable read_csv(const std::filesystem::path &path);
void write_csv(const CsvTable &table, const std::filesystem::path &path);

/// Shortest decimal representation that round-trips (for byte-stable CSV output).
std::string format_double(double value);
double parse_double(const std::string &text);

} // namespace splatguard
