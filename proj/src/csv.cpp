#include "crtcea/csv.hpp"
#include "crtcea/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace crtcea::csv {

int Table::column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

} // namespace

Table read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);

    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw InputError(path + ": row " + std::to_string(table.rows.size() + 1) +
                             " has " + std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InputError(path + ": empty file, missing header");
    return table;
}

void write_file(const std::string &path, const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows,
                const std::vector<std::string> &comments) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (const auto &c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto &row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string &field, const std::string &context) {
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const char *first = field.data();
    const char *last = field.data() + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw InputError("malformed numeric cell '" + field + "' at " + context);
    return value;
}

} // namespace crtcea::csv
