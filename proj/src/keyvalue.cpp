#include "natval/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "natval/error.hpp"

namespace natval {

std::string trim_copy(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_trimmed(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(sep, start);
        if (end == std::string_view::npos) end = text.size();
        auto item = trim_copy(text.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = end + 1;
    }
    return out;
}

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
    KeyValueDoc doc;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim_copy(text.substr(start, end - start));
        start = end + 1;
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", lineno));
        auto key = trim_copy(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", lineno));
        doc.values_[key] = trim_copy(std::string_view(line).substr(eq + 1));
    }
    return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::optional<std::string> KeyValueDoc::get(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    return std::nullopt;
}

std::string KeyValueDoc::get_or(const std::string& key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

std::string KeyValueDoc::require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError(fmt::format("missing required key '{}'", key));
    return *v;
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v || v->empty()) return fallback;
    try {
        std::size_t used = 0;
        double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, *v));
    }
}

long long KeyValueDoc::get_int(const std::string& key, long long fallback) const {
    auto v = get(key);
    if (!v || v->empty()) return fallback;
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size())
        throw ConfigError(fmt::format("key '{}': '{}' is not an integer", key, *v));
    return out;
}

std::vector<std::string> KeyValueDoc::get_list(const std::string& key, char sep) const {
    auto v = get(key);
    if (!v) return {};
    return split_trimmed(*v, sep);
}

}  // namespace natval
