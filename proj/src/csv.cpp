#include "natval/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <fmt/format.h>

#include "natval/error.hpp"

namespace natval::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

class Scanner {
public:
    Scanner(std::string text, char delim) : text_(std::move(text)), delim_(delim) {
        if (text_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
    }

    bool done() const { return pos_ >= text_.size(); }
    std::size_t line() const { return line_; }

    bool at_comment() const { return !done() && text_[pos_] == '#'; }

    void skip_line() {
        while (!done() && text_[pos_] != '\n') ++pos_;
        if (!done()) {
            ++pos_;
            ++line_;
        }
    }

    std::vector<std::string> next_record() {
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        const std::size_t start_line = line_;
        while (true) {
            if (done()) {
                if (quoted) throw Error(fmt::format("unterminated quoted field starting on line {}", start_line));
                fields.push_back(std::move(field));
                return fields;
            }
            const char c = text_[pos_++];
            if (quoted) {
                if (c == '"') {
                    if (!done() && text_[pos_] == '"') {
                        field.push_back('"');
                        ++pos_;
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(c);
                }
                continue;
            }
            if (c == '"' && trim(field).empty()) {
                field.clear();
                quoted = true;
            } else if (c == delim_) {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\r' && !done() && text_[pos_] == '\n') {
                continue;
            } else if (c == '\n') {
                ++line_;
                fields.push_back(std::move(field));
                return fields;
            } else {
                field.push_back(c);
            }
        }
    }

private:
    std::string text_;
    char delim_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

bool blank(const std::vector<std::string>& rec) {
    return rec.size() == 1 && trim(rec.front()).empty();
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == trim(name)) return i;
    }
    return std::nullopt;
}

Table read(std::istream& in, const ReadOptions& opts) {
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    Scanner scan(std::move(text), opts.delimiter);
    Table table;
    if (opts.skip_leading_comments) {
        while (scan.at_comment()) scan.skip_line();
    }
    if (scan.done()) return table;
    for (auto& h : scan.next_record()) table.header.emplace_back(trim(h));
    while (!scan.done()) {
        const std::size_t line = scan.line();
        auto rec = scan.next_record();
        if (blank(rec)) continue;
        table.rows.push_back(Row{line, std::move(rec)});
    }
    return table;
}

Table read_file(const std::string& path, const ReadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}'", path));
    return read(in, opts);
}

std::string escape(std::string_view field, char delimiter) {
    const bool needs_quotes = field.find_first_of(std::string{'"', '\n', '\r', delimiter}) != std::string_view::npos ||
                              (!field.empty() && (field.front() == ' ' || field.back() == ' ' || field.front() == '#'));
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

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(delimiter);
        out << escape(fields[i], delimiter);
    }
    out.put('\n');
}

}  // namespace natval::csv
