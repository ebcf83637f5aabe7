#include "natval/promptkit.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "natval/error.hpp"
#include "natval/hash.hpp"
#include "natval/keyvalue.hpp"

namespace natval {

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::Quality: return "Quality";
        case Regime::QualityCountry: return "QualityCountry";
        case Regime::ValueCountry: return "ValueCountry";
    }
    return "?";
}

std::string_view to_string(Variant v) {
    return v == Variant::Report ? "Report" : "ProbabilityOnly";
}

Regime regime_from_string(std::string_view s) {
    for (auto r : kAllRegimes) {
        if (to_string(r) == s) return r;
    }
    throw Error(fmt::format("unknown regime '{}'", s));
}

Variant variant_from_string(std::string_view s) {
    if (s == "Report" || s == "report") return Variant::Report;
    if (s == "ProbabilityOnly" || s == "probability") return Variant::ProbabilityOnly;
    throw Error(fmt::format("unknown variant '{}'", s));
}

CountryProfile CountryProfile::load(const std::filesystem::path& path) {
    const auto doc = KeyValueDoc::load(path);
    CountryProfile p;
    p.name = doc.require("name");
    p.mention_aliases = doc.get_list("aliases");
    if (p.mention_aliases.empty()) p.mention_aliases.push_back(p.name);
    p.sectors = doc.get_list("sectors");
    return p;
}

namespace {

std::string variant_file_tag(Variant v) { return v == Variant::Report ? "report" : "probability"; }

constexpr std::string_view kCountry = "{{country}}";
constexpr std::string_view kSectors = "{{sectors}}";

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string TemplateStore::file_name(Regime r, Panel p, Variant v) {
    return fmt::format("{}_{}_{}.txt", to_string(r), to_string(p), variant_file_tag(v));
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError(fmt::format("template directory '{}' not found", dir.string()));
    TemplateStore store;
    for (auto r : kAllRegimes) {
        for (auto p : kAllPanels) {
            for (auto v : kAllVariants) {
                const auto path = dir / file_name(r, p, v);
                std::ifstream in(path, std::ios::binary);
                if (!in) continue;
                std::stringstream ss;
                ss << in.rdbuf();
                store.add(r, p, v, ss.str());
            }
        }
    }
    return store;
}

void TemplateStore::add(Regime r, Panel p, Variant v, std::string text) {
    templates_[{r, p, v}] = std::move(text);
}

bool TemplateStore::contains(Regime r, Panel p, Variant v) const { return templates_.contains({r, p, v}); }

const std::string& TemplateStore::text(Regime r, Panel p, Variant v) const {
    auto it = templates_.find({r, p, v});
    if (it == templates_.end()) throw Error(fmt::format("no template {}", file_name(r, p, v)));
    return it->second;
}

std::string TemplateStore::version(Regime r, Panel p, Variant v) const {
    return sha256_hex(text(r, p, v)).substr(0, 16);
}

std::string TemplateStore::set_version() const {
    std::string all;
    for (const auto& [key, text] : templates_) {
        const auto& [r, p, v] = key;
        all += fmt::format("{}={}\n", file_name(r, p, v), sha256_hex(text));
    }
    return sha256_hex(all).substr(0, 16);
}

PromptSpec render_system_instructions(const TemplateStore& store, Regime regime, Panel panel, Variant variant,
                                      const CountryProfile& profile) {
    const auto& tmpl = store.text(regime, panel, variant);
    const bool uses_country = tmpl.find(kCountry) != std::string::npos;
    const bool uses_sectors = tmpl.find(kSectors) != std::string::npos;
    if (regime == Regime::Quality && (uses_country || uses_sectors))
        throw Error(fmt::format("{} references the country but Quality templates must not",
                                TemplateStore::file_name(regime, panel, variant)));
    if (uses_country && profile.name.empty()) throw Error("country profile has no name");
    if (uses_sectors && profile.sectors.empty()) throw Error("country profile has no sectors");

    PromptSpec spec;
    spec.regime = regime;
    spec.panel = panel;
    spec.variant = variant;
    spec.template_version = store.version(regime, panel, variant);
    spec.system_text = tmpl;
    replace_all(spec.system_text, kSectors, fmt::format("{}", fmt::join(profile.sectors, ", ")));
    replace_all(spec.system_text, kCountry, profile.name);

    if (auto open = spec.system_text.find("{{"); open != std::string::npos) {
        const auto close = spec.system_text.find("}}", open);
        const auto name = close == std::string::npos ? spec.system_text.substr(open, 24)
                                                     : spec.system_text.substr(open, close + 2 - open);
        throw Error(fmt::format("unresolved placeholder {} in {}", name, TemplateStore::file_name(regime, panel, variant)));
    }
    if (trim_copy(spec.system_text).empty())
        throw Error(fmt::format("{} is empty", TemplateStore::file_name(regime, panel, variant)));
    return spec;
}

std::string build_user_prompt(const Article& article) {
    if (trim_copy(article.title).empty()) throw Error(fmt::format("article '{}' has an empty title", article.id));
    if (trim_copy(article.abstract).empty()) throw Error(fmt::format("article '{}' has an empty abstract", article.id));
    return fmt::format("Score this journal article.\n\nTitle: {}\n\nAbstract: {}", article.title, article.abstract);
}

}  // namespace natval
