#pragma once

#include <optional>
#include <string>
#include <vector>

namespace crtcea::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string &name) const; // -1 when absent
};

/// Reads a comma-separated file with a mandatory header row. Lines starting
/// with '#' are treated as comments and skipped. No quoting support: fields
/// in this format never contain commas. Empty fields are kept as "".
Table read_file(const std::string &path);

/// Writes rows as-is; caller formats numbers. `comments` lines are emitted
/// first, each prefixed with "# ".
void write_file(const std::string &path, const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows,
                const std::vector<std::string> &comments = {});

/// Shortest decimal representation that round-trips through double.
std::string format_double(double value);

/// Parses a full field as a double. Empty → nullopt. Anything else that does
/// not fully parse → InputError carrying `context` (e.g. "row 3, column cost").
std::optional<double> parse_double(const std::string &field, const std::string &context);

} // namespace crtcea::csv
