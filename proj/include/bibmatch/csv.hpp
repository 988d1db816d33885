#pragma once

// CSV reading/writing for the output contracts: comma-separated, double-quote
// escaping, UTF-8 without BOM, LF line endings.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bibmatch/errors.hpp"

namespace bibmatch::csv {

inline std::string escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string make_row(const std::vector<std::string>& fields) {
    // A lone empty field must be quoted or the row would read as a blank line.
    if (fields.size() == 1 && fields[0].empty()) return "\"\"\n";
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

/// Parses a full CSV document into rows of fields. Handles quoted fields,
/// doubled quotes and CRLF/LF endings.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
            row_started = true;
        } else if (c == ',') {
            end_field();
            row_started = true;
        } else if (c == '\n') {
            if (row_started || !field.empty() || !row.empty()) end_row();
        } else if (c == '\r') {
            // swallowed; the following \n ends the row
        } else {
            field.push_back(c);
            row_started = true;
        }
        ++i;
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

/// A parsed CSV with a header row; cells addressed by column name.
class Table {
public:
    explicit Table(std::string_view text) {
        auto rows = parse(text);
        if (rows.empty()) return;
        header_ = rows.front();
        for (size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
        rows_.assign(rows.begin() + 1, rows.end());
    }

    static Table from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("csv: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return Table(ss.str());
    }

    size_t size() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    bool has_column(const std::string& name) const { return index_.count(name) > 0; }

    /// Cell by column name; empty string for missing columns or short rows.
    std::string cell(size_t row, const std::string& column) const {
        auto it = index_.find(column);
        if (it == index_.end() || row >= rows_.size()) return {};
        if (it->second >= rows_[row].size()) return {};
        return rows_[row][it->second];
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::unordered_map<std::string, size_t> index_;
};

} // namespace bibmatch::csv
