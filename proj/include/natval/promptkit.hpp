#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "natval/corpus.hpp"

namespace natval {

/// Instruction family: generic research quality, quality with country-restricted
/// significance, and significance-only national value.
enum class Regime { Quality, QualityCountry, ValueCountry };
/// Report asks for a score with rationale; ProbabilityOnly asks for the bare score.
enum class Variant { Report, ProbabilityOnly };

inline constexpr std::array<Regime, 3> kAllRegimes{Regime::Quality, Regime::QualityCountry, Regime::ValueCountry};
inline constexpr std::array<Variant, 2> kAllVariants{Variant::Report, Variant::ProbabilityOnly};

std::string_view to_string(Regime r);
std::string_view to_string(Variant v);
Regime regime_from_string(std::string_view s);
/// Accepts "Report"/"report" and "ProbabilityOnly"/"probability".
Variant variant_from_string(std::string_view s);

struct CountryProfile {
    std::string name;
    std::vector<std::string> mention_aliases;
    std::vector<std::string> sectors;

    /// Keys: name, aliases (';'-separated), sectors (';'-separated, order preserved).
    /// Aliases default to the name when omitted.
    static CountryProfile load(const std::filesystem::path& path);
};

struct PromptSpec {
    Regime regime = Regime::Quality;
    Panel panel = Panel::A;
    Variant variant = Variant::Report;
    std::string system_text;
    /// Short content hash of the unrendered template.
    std::string template_version;
};

/// The 24 system-instruction templates, one file per (regime, panel, variant):
/// `<Regime>_<Panel>_<report|probability>.txt`, placeholders `{{country}}` and `{{sectors}}`.
class TemplateStore {
public:
    static TemplateStore load(const std::filesystem::path& dir);
    static std::string file_name(Regime r, Panel p, Variant v);

    void add(Regime r, Panel p, Variant v, std::string text);
    bool contains(Regime r, Panel p, Variant v) const;
    const std::string& text(Regime r, Panel p, Variant v) const;
    std::string version(Regime r, Panel p, Variant v) const;
    /// Hash over all template versions in canonical order.
    std::string set_version() const;

private:
    std::map<std::tuple<Regime, Panel, Variant>, std::string> templates_;
};

/// Throws natval::Error on a missing template, an unresolved placeholder, or a
/// Quality template that references the country.
PromptSpec render_system_instructions(const TemplateStore& store, Regime regime, Panel panel, Variant variant,
                                      const CountryProfile& profile);

/// Scoring request followed by title and abstract; never any other field.
std::string build_user_prompt(const Article& article);

}  // namespace natval
