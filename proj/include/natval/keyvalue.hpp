#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace natval {

/// Flat `key = value` document. Lines starting with '#' are comments; later keys override earlier ones.
class KeyValueDoc {
public:
    static KeyValueDoc parse(std::string_view text);
    static KeyValueDoc load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.contains(key); }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, std::string fallback) const;
    /// Throws ConfigError naming the key when it is absent.
    std::string require(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    /// Splits on `sep`, trims each item, drops empty items.
    std::vector<std::string> get_list(const std::string& key, char sep = ';') const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_trimmed(std::string_view text, char sep);
std::string trim_copy(std::string_view text);

}  // namespace natval
