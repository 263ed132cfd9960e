#include "anaquest/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anaquest::csv {

namespace {

std::vector<std::string> split_line(const std::string& line, const std::string& path,
                                    std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            cur.push_back(c);
        }
    }
    if (in_quotes) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unterminated quote");
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int Table::require_column(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw std::runtime_error(path + ": missing required column '" + name + "'");
    return c;
}

const std::string& Table::cell(std::size_t row, int col) const {
    return rows[row][static_cast<std::size_t>(col)];
}

int Table::cell_int(std::size_t row, int col) const {
    const std::string& s = cell(row, col);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error(path + ":" + std::to_string(line_of_row(row)) + ": column '" +
                                 header[static_cast<std::size_t>(col)] +
                                 "': not an integer: '" + s + "'");
    }
    return value;
}

double Table::cell_double(std::size_t row, int col) const {
    const std::string& s = cell(row, col);
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_of_row(row)) + ": column '" +
                                 header[static_cast<std::size_t>(col)] + "': not a number: '" +
                                 s + "'");
    }
}

Table parse(const std::string& text, const std::string& path_for_errors) {
    Table t;
    t.path = path_for_errors;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            t.header = split_line(line, t.path, line_no);
            continue;
        }
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line, t.path, line_no);
        if (fields.size() != t.header.size()) {
            throw std::runtime_error(t.path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(t.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw std::runtime_error(t.path + ": empty file, header expected");
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape_field(fields[i]);
    }
    out.push_back('\n');
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

}  // namespace anaquest::csv
