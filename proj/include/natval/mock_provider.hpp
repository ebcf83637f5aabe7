#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "natval/gateway.hpp"
#include "natval/keyvalue.hpp"

namespace natval {

/// Probability of each star level 1..4 (index 0 is 1*).
struct ScoreDistribution {
    std::array<double, 4> p{};

    /// Parses "3:0.6, 2:0.4"; the result is normalized to sum 1.
    static ScoreDistribution parse(std::string_view spec);
    static ScoreDistribution point(int score);
    ScoreDistribution normalized() const;
};

/// Article-level latent trait driving one regime's scores. Regimes sharing a channel
/// produce correlated scores; `noise` in [0, 1] mixes in a regime-private trait.
struct LatentSpec {
    std::string channel = "quality";
    double noise = 0.0;
};

/// Score model for the mock provider. Per article and regime, the latent trait L in
/// [0, 1) sets a centre mu = 1 + 3L + offset, and the distribution over 1..4 is a
/// discretized Gaussian around mu with standard deviation `spread`. A fixed
/// distribution for a (regime, panel) replaces the latent model entirely.
///
/// Key-value form:
///     spread = 0.6
///     latent.QualityCountry = quality, 0.3
///     offset.ValueCountry.B = -0.8
///     fixed.Quality.A = 3:0.6, 2:0.4
struct MockScoreModel {
    double spread = 0.6;
    std::map<Regime, LatentSpec> latent;
    std::map<std::pair<Regime, Panel>, double> offset;
    std::map<std::pair<Regime, Panel>, ScoreDistribution> fixed;

    /// Quality and QualityCountry share the "quality" channel (QualityCountry with 0.3
    /// noise); ValueCountry reads an independent "value" channel.
    static MockScoreModel defaults();
    static MockScoreModel from_doc(const KeyValueDoc& doc);
    static MockScoreModel load(const std::filesystem::path& path);

    ScoreDistribution distribution(Regime regime, Panel panel, std::string_view user_text, std::uint64_t seed) const;
};

/// Deterministic provider: each response is a pure function of (seed, request).
/// Report requests sample one star level and return a short rationale ending in
/// "Score: k*"; ProbabilityOnly requests return the model distribution as
/// token probabilities over "1".."4".
class MockProvider final : public ScoringProvider {
public:
    explicit MockProvider(std::uint64_t seed, MockScoreModel model = MockScoreModel::defaults());

    std::string id() const override;
    RawResponse complete(const ScoreRequest& request) override;

private:
    std::uint64_t seed_;
    MockScoreModel model_;
};

}  // namespace natval
