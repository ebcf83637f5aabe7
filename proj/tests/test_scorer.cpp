#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "natval/scorer.hpp"

using namespace natval;

namespace {

ScoreSample sample(std::string id, Regime r, Variant v, int run, double value) {
    ScoreSample s;
    s.article_id = std::move(id);
    s.regime = r;
    s.variant = v;
    s.run_index = run;
    if (v == Variant::Report) s.parsed_score = static_cast<int>(value);
    else s.weighted_score = value;
    return s;
}

}  // namespace

TEST_CASE("score extraction from reports") {
    CHECK(extract_score("The work is original, warranting a high score of 3*.") == 3);
    CHECK(extract_score("These limitations justify a score of 2*.") == 2);
    CHECK(extract_score("Originality: 4*. Rigour: 2*. Overall score: 3*") == 3);
    CHECK(extract_score("I would give this a score of 4") == 4);
    CHECK_THROWS_AS(extract_score("no stars here"), ParseFailure);
    CHECK_THROWS_AS(extract_score("Score: 5*"), ParseFailure);
    try {
        extract_score("no stars here");
    } catch (const ParseFailure& e) {
        CHECK(e.report() == "no stars here");
    }
}

TEST_CASE("probability-weighted score") {
    CHECK(std::abs(weighted_score({{3, 0.6}, {2, 0.4}}) - 2.6) <= 1e-12);
    CHECK(weighted_score({{4, 1.0}}) == 4.0);
    CHECK(weighted_score({{1, 0.25}, {2, 0.25}, {3, 0.25}, {4, 0.25}}) == 2.5);
    CHECK(weighted_score({{3, 0.3}, {2, 0.2}}) == doctest::Approx(2.6).epsilon(1e-12));
    CHECK_THROWS_AS(weighted_score({}), Error);
    CHECK_THROWS_AS(weighted_score({{3, 0.0}}), Error);
    CHECK_THROWS_AS(weighted_score({{5, 1.0}}), Error);
    CHECK_THROWS_AS(weighted_score({{3, -0.1}, {2, 1.0}}), Error);
}

TEST_CASE("token distribution keeps only score tokens") {
    const auto d = score_distribution({{"3", 0.5}, {" 2", 0.3}, {"Score", 0.15}, {"4*", 0.05}});
    CHECK(d.size() == 3);
    CHECK(d.at(2) == 0.3);
    CHECK(d.at(4) == 0.05);
    CHECK_THROWS_AS(weighted_score(score_distribution({{"five", 1.0}})), Error);
}

TEST_CASE("aggregation over runs") {
    std::vector<ScoreSample> s;
    for (int run = 1; run <= 5; ++run) {
        s.push_back(sample("a", Regime::Quality, Variant::Report, run, 3));
        s.push_back(sample("a", Regime::Quality, Variant::ProbabilityOnly, run, 2.6));
    }
    auto agg = aggregate(s, 5);
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].std_mean == 3.0);
    CHECK(agg[0].prob_mean == doctest::Approx(2.6).epsilon(1e-12));
    CHECK(agg[0].combined == doctest::Approx(2.8).epsilon(1e-12));
    CHECK_FALSE(agg[0].incomplete);

    agg = aggregate({sample("b", Regime::Quality, Variant::Report, 1, 2),
                     sample("b", Regime::Quality, Variant::ProbabilityOnly, 1, 2.0)},
                    1);
    CHECK(agg[0].combined == 2.0);

    agg = aggregate({sample("c", Regime::Quality, Variant::Report, 1, 1), sample("c", Regime::Quality, Variant::Report, 2, 4)},
                    2);
    CHECK(agg[0].std_mean == 2.5);
    CHECK(std::isnan(agg[0].prob_mean));
    CHECK(agg[0].incomplete);
}

TEST_CASE("failed runs lower the count and flag the article") {
    std::vector<ScoreSample> s{sample("a", Regime::Quality, Variant::Report, 1, 2)};
    ScoreSample bad;
    bad.article_id = "a";
    bad.run_index = 2;
    bad.failure = "no score pattern";
    s.push_back(bad);
    const auto agg = aggregate(s, 2);
    CHECK(agg[0].std_runs == 1);
    CHECK(agg[0].failures == 1);
    CHECK(agg[0].incomplete);
    CHECK(agg[0].std_mean == 2.0);
}

TEST_CASE("aggregation is order independent") {
    std::vector<ScoreSample> s;
    const double values[] = {1.1, 2.7, 3.3, 1.9, 2.2};
    for (int run = 1; run <= 5; ++run) {
        s.push_back(sample("x", Regime::ValueCountry, Variant::ProbabilityOnly, run, values[run - 1]));
        s.push_back(sample("y", Regime::Quality, Variant::Report, run, run % 4 + 1));
    }
    const auto forward = aggregate(s, 5);
    std::reverse(s.begin(), s.end());
    const auto backward = aggregate(s, 5);
    REQUIRE(forward.size() == backward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) {
        CHECK(forward[i].article_id == backward[i].article_id);
        CHECK(std::memcmp(&forward[i].prob_mean, &backward[i].prob_mean, sizeof(double)) == 0);
        CHECK(std::memcmp(&forward[i].combined, &backward[i].combined, sizeof(double)) == 0);
    }
    s.push_back(sample("y", Regime::Quality, Variant::Report, 6, 2));
    CHECK_THROWS_AS(aggregate(s, 5), Error);
}

TEST_CASE("score matrix round trip") {
    std::vector<ScoreSample> s;
    for (auto r : kAllRegimes) {
        s.push_back(sample("a", r, Variant::Report, 1, 3));
        s.push_back(sample("a", r, Variant::ProbabilityOnly, 1, 2.6));
    }
    s.push_back(sample("b", Regime::Quality, Variant::Report, 1, 1));
    const auto matrix = build_score_matrix(aggregate(s, 1), {{"a", Panel::B}, {"b", Panel::D}});
    std::stringstream ss;
    write_score_matrix(ss, matrix);
    const auto back = read_score_matrix(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].panel == Panel::B);
    CHECK(back[0].combined(Regime::ValueCountry) == doctest::Approx(2.8));
    CHECK(back[0].complete(Regime::ValueCountry));
    CHECK(std::isnan(back[1].combined(Regime::ValueCountry)));
    CHECK_FALSE(back[1].complete(Regime::Quality));
    CHECK(back[1].std_mean(Regime::Quality) == 1.0);
}
