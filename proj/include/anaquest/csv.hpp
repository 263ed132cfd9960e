#pragma once

#include <string>
#include <vector>

namespace anaquest::csv {

struct Table {
    std::string path;  // for error messages
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // same width as header

    int column(const std::string& name) const;              // -1 if absent
    int require_column(const std::string& name) const;      // throws naming the column
    // Cell accessors that throw with "<path>:<line>: column '<name>' ..." context.
    const std::string& cell(std::size_t row, int col) const;
    int cell_int(std::size_t row, int col) const;
    double cell_double(std::size_t row, int col) const;
    std::size_t line_of_row(std::size_t row) const { return row + 2; }  // 1-based, after header
};

// Reads a CSV file with a header row. Supports quoted fields with ""
// escapes; rows with a field count different from the header are an error.
Table read_file(const std::string& path);
Table parse(const std::string& text, const std::string& path_for_errors);

std::string escape_field(const std::string& field);
std::string format_row(const std::vector<std::string>& fields);

// Shortest round-trip decimal rendering for doubles (std::to_chars), so
// emitted files are byte-stable.
std::string format_double(double v);

}  // namespace anaquest::csv
