#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace natval::csv {

/// One data record with the physical line on which it started (1-based).
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Index of a header column, or nullopt when absent. Exact match after trimming.
    std::optional<std::size_t> column(std::string_view name) const;
};

struct ReadOptions {
    char delimiter = ',';
    /// Skip lines starting with '#' that precede the header (provenance banners).
    bool skip_leading_comments = true;
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF, UTF-8 BOM.
/// Throws natval::Error on an unterminated quoted field.
Table read(std::istream& in, const ReadOptions& opts = {});
Table read_file(const std::string& path, const ReadOptions& opts = {});

std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace natval::csv
