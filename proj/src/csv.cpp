// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/csv.hpp"

#include "splatguard/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace splatguard {

namespace {

std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

std::size_t CsvTable::column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    fail(ErrorCode::Format, "CSV is missing column '" + name + "'");
}

std::string CsvTable::to_string() const {
    std::string out;
    auto emit = [&](const std::vector<std::string> &cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            out += cells[i];
        }
        out.push_back('\n');
    };
    emit(header);
    for (const auto &r : rows) emit(r);
    return out;
}

CsvTable parse_csv(const std::string &text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (first) {
            table.header = std::move(cells);
            first        = false;
            continue;
        }
        require(cells.size() == table.header.size(), ErrorCode::Format,
                "CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                    std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    require(!first, ErrorCode::Format, "CSV is empty");
    return table;
}

CsvTable read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

void write_csv(const CsvTable &table, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open for writing: " + path.string());
    out << table.to_string();
    require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path.string());
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string &text) {
    double v       = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    require(res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::Format,
            "not a number: '" + text + "'");
    return v;
}

} // namespace splatguard
