// natval: ingest, score and analyze a country-value study from one project config.

#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "natval/keyvalue.hpp"
#include "natval/pipeline.hpp"

namespace {

template <typename T, typename Parse>
std::set<T> parse_list(const std::string& text, Parse parse) {
    std::set<T> out;
    for (const auto& item : natval::split_trimmed(text, ',')) {
        try {
            out.insert(parse(item));
        } catch (const natval::Error& e) {
            throw natval::ConfigError(e.what());
        }
    }
    if (out.empty()) throw natval::ConfigError(fmt::format("empty selection '{}'", text));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score research articles for quality and national value with a language model, then analyze."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "Project configuration file")->required()->check(CLI::ExistingFile);

    auto* ingest = app.add_subcommand("ingest", "Parse, filter and classify the corpus");

    auto* score = app.add_subcommand("score", "Score every article (live provider or --mock)");
    std::optional<std::uint64_t> mock_seed;
    std::string regimes = "Quality,QualityCountry,ValueCountry";
    std::string variants = "Report,ProbabilityOnly";
    bool resume = false;
    score->add_option("--mock", mock_seed, "Use the deterministic mock provider with this seed");
    score->add_option("--regimes", regimes, "Comma-separated regimes")->capture_default_str();
    score->add_option("--variants", variants, "Comma-separated variants")->capture_default_str();
    score->add_flag("--resume", resume, "Continue an interrupted scoring run from the cache");

    auto* analyze = app.add_subcommand("analyze", "Compute citation scores, correlations, audits and WATA worksheets");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = natval::ProjectConfig::load(config_path);
        if (ingest->parsed()) {
            const auto r = natval::cmd_ingest(cfg);
            std::cout << fmt::format("{} articles kept of {} parsed; {} resolved by override; 0 unresolved\n", r.kept,
                                     r.parsed, r.overridden);
        } else if (score->parsed()) {
            natval::ScoreOptions opts;
            opts.regimes = parse_list<natval::Regime>(regimes, natval::regime_from_string);
            opts.variants = parse_list<natval::Variant>(variants, natval::variant_from_string);
            opts.mock_seed = mock_seed;
            opts.resume = resume;
            const auto r = natval::cmd_score(cfg, opts);
            std::cout << fmt::format("{} articles, {} requests, {} provider calls, {} cache hits, {} failures\n",
                                     r.articles, r.requests, r.telemetry.provider_calls, r.telemetry.cache_hits,
                                     r.failures + r.parse_failures);
        } else if (analyze->parsed()) {
            const auto r = natval::cmd_analyze(cfg);
            for (const auto& p : r.outputs) std::cout << p.string() << '\n';
            std::cout << fmt::format("{} correlations, {} skipped\n", r.correlations, r.skipped_correlations);
        }
    } catch (const natval::UnresolvedPanels& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const natval::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
