#include "natval/mock_provider.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "natval/error.hpp"
#include "natval/hash.hpp"
#include "natval/rng.hpp"

namespace natval {

ScoreDistribution ScoreDistribution::parse(std::string_view spec) {
    ScoreDistribution d;
    for (const auto& item : split_trimmed(spec, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(fmt::format("distribution entry '{}' lacks ':'", item));
        const auto key = trim_copy(std::string_view(item).substr(0, colon));
        const auto val = trim_copy(std::string_view(item).substr(colon + 1));
        int score = 0;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), score);
        if (ec != std::errc{} || ptr != key.data() + key.size() || score < 1 || score > 4)
            throw ConfigError(fmt::format("distribution key '{}' is not a score 1..4", key));
        double p = 0.0;
        try {
            p = std::stod(val);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("distribution value '{}' is not a number", val));
        }
        if (p < 0.0) throw ConfigError(fmt::format("negative probability in '{}'", item));
        d.p[score - 1] += p;
    }
    return d.normalized();
}

ScoreDistribution ScoreDistribution::point(int score) {
    if (score < 1 || score > 4) throw Error(fmt::format("score {} outside 1..4", score));
    ScoreDistribution d;
    d.p[score - 1] = 1.0;
    return d;
}

ScoreDistribution ScoreDistribution::normalized() const {
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0)) throw Error("score distribution has no mass");
    ScoreDistribution d;
    for (std::size_t i = 0; i < 4; ++i) d.p[i] = p[i] / total;
    return d;
}

MockScoreModel MockScoreModel::defaults() {
    MockScoreModel m;
    m.latent[Regime::Quality] = {"quality", 0.0};
    m.latent[Regime::QualityCountry] = {"quality", 0.3};
    m.latent[Regime::ValueCountry] = {"value", 0.0};
    return m;
}

MockScoreModel MockScoreModel::from_doc(const KeyValueDoc& doc) {
    auto m = defaults();
    m.spread = doc.get_double("spread", m.spread);
    if (!(m.spread > 0.0)) throw ConfigError("mock spread must be positive");
    for (const auto& [key, value] : doc.entries()) {
        const auto parts = split_trimmed(key, '.');
        if (parts.empty()) continue;
        if (parts[0] == "latent" && parts.size() == 2) {
            const auto fields = split_trimmed(value, ',');
            if (fields.empty()) throw ConfigError(fmt::format("'{}' needs a channel", key));
            LatentSpec spec{fields[0], fields.size() > 1 ? std::stod(fields[1]) : 0.0};
            if (spec.noise < 0.0 || spec.noise > 1.0) throw ConfigError(fmt::format("'{}': noise outside [0, 1]", key));
            m.latent[regime_from_string(parts[1])] = spec;
        } else if (parts[0] == "offset" && parts.size() == 3) {
            m.offset[{regime_from_string(parts[1]), panel_from_string(parts[2])}] = doc.get_double(key, 0.0);
        } else if (parts[0] == "fixed" && parts.size() == 3) {
            m.fixed[{regime_from_string(parts[1]), panel_from_string(parts[2])}] = ScoreDistribution::parse(value);
        } else if (key != "spread") {
            throw ConfigError(fmt::format("unknown mock model key '{}'", key));
        }
    }
    return m;
}

MockScoreModel MockScoreModel::load(const std::filesystem::path& path) {
    return from_doc(KeyValueDoc::load(path));
}

namespace {

double trait(std::uint64_t seed, std::string_view kind, std::string_view name, std::string_view text) {
    std::uint64_t h = fnv1a64(kind, splitmix64(seed));
    h = fnv1a64(name, h ^ 0xff);
    h = fnv1a64(text, h ^ 0xfe);
    return unit_interval(h);
}

}  // namespace

ScoreDistribution MockScoreModel::distribution(Regime regime, Panel panel, std::string_view user_text,
                                               std::uint64_t seed) const {
    if (auto it = fixed.find({regime, panel}); it != fixed.end()) return it->second;

    LatentSpec spec;
    if (auto it = latent.find(regime); it != latent.end()) spec = it->second;
    const double shared = trait(seed, "latent", spec.channel, user_text);
    const double own = trait(seed, "noise", to_string(regime), user_text);
    const double level = (1.0 - spec.noise) * shared + spec.noise * own;

    double mu = 1.0 + 3.0 * level;
    if (auto it = offset.find({regime, panel}); it != offset.end()) mu += it->second;

    ScoreDistribution d;
    for (int k = 1; k <= 4; ++k) {
        const double z = (k - mu) / spread;
        d.p[k - 1] = std::exp(-0.5 * z * z);
    }
    return d.normalized();
}

MockProvider::MockProvider(std::uint64_t seed, MockScoreModel model) : seed_(seed), model_(std::move(model)) {}

std::string MockProvider::id() const { return fmt::format("mock-{}", seed_); }

RawResponse MockProvider::complete(const ScoreRequest& request) {
    const auto& prompt = request.prompt;
    const auto dist = model_.distribution(prompt.regime, prompt.panel, request.user_text, seed_);

    RawResponse resp;
    resp.provider_id = id();
    resp.fingerprint = request.fingerprint();
    resp.timestamp = "1970-01-01T00:00:00Z";

    if (request.want_token_probabilities) {
        std::vector<TokenProbability> tokens;
        for (int k = 1; k <= 4; ++k) {
            if (dist.p[k - 1] > 0.0) tokens.push_back({std::to_string(k), dist.p[k - 1]});
        }
        std::stable_sort(tokens.begin(), tokens.end(),
                         [](const auto& a, const auto& b) { return a.probability > b.probability; });
        resp.text = tokens.front().token + "*";
        resp.token_probabilities = std::move(tokens);
        return resp;
    }

    const double u = unit_interval(fnv1a64(resp.fingerprint, splitmix64(seed_)));
    int score = 4;
    double cdf = 0.0;
    for (int k = 1; k <= 4; ++k) {
        cdf += dist.p[k - 1];
        if (u < cdf) {
            score = k;
            break;
        }
    }
    const std::string_view focus = prompt.regime == Regime::ValueCountry
                                       ? "its direct significance for the country"
                                       : "originality, significance and rigour";
    resp.text = fmt::format(
        "Assessment (run {}). The article was evaluated on {}. The contribution is described clearly and the "
        "approach is appropriate for the stated aims, although the abstract leaves some questions open about "
        "scope and wider applicability. Taking these points together, the work warrants a score of {}*.\n\n"
        "Score: {}*",
        request.run_index, focus, score, score);
    return resp;
}

}  // namespace natval
