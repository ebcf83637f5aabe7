#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "natval/biblio.hpp"
#include "natval/stats.hpp"
#include "oracles.hpp"

using namespace natval;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("log citation") {
    CHECK(log_citation(0) == 0.0);
    CHECK(log_citation(2) == doctest::Approx(1.0986122886681098).epsilon(1e-14));
    CHECK(log_citation(6) == doctest::Approx(1.9459101490553132).epsilon(1e-14));
    CHECK_THROWS_AS(log_citation(-1), Error);
}

TEST_CASE("NLCS within a stratum") {
    std::vector<CitationInput> in{{"a", Panel::A, 2018, 0}, {"b", Panel::A, 2018, 2}, {"c", Panel::A, 2018, 6}};
    const auto out = compute_nlcs(in);
    REQUIRE(out.size() == 3);
    const double mean = (std::log(3.0) + std::log(7.0)) / 3.0;
    CHECK(mean == doctest::Approx(1.0148).epsilon(1e-4));
    CHECK(out[0].nlcs == 0.0);
    CHECK(out[1].nlcs == doctest::Approx(1.0825).epsilon(1e-4));
    CHECK(out[2].nlcs == doctest::Approx(1.9175).epsilon(1e-4));
    CHECK(out[0].nlcs + out[1].nlcs + out[2].nlcs == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("NLCS degenerate strata") {
    const auto equal = compute_nlcs(std::vector<CitationInput>{{"a", Panel::B, 2016, 5}, {"b", Panel::B, 2016, 5}});
    CHECK(equal[0].nlcs == 1.0);
    CHECK(equal[1].nlcs == 1.0);
    const auto zeros = compute_nlcs(std::vector<CitationInput>{{"a", Panel::B, 2016, 0}, {"b", Panel::B, 2016, 0}});
    CHECK(zeros[0].nlcs == 1.0);
    const auto single = compute_nlcs(std::vector<CitationInput>{{"a", Panel::C, 2020, 9}});
    CHECK(single[0].nlcs == 1.0);
    // Strata are separate: same counts, different years.
    const auto mixed = compute_nlcs(std::vector<CitationInput>{
        {"a", Panel::A, 2016, 1}, {"b", Panel::A, 2017, 10}, {"c", Panel::A, 2016, 3}, {"d", Panel::B, 2016, 1}});
    CHECK(mixed[1].nlcs == 1.0);
    CHECK(mixed[3].nlcs == 1.0);
    CHECK(mixed[0].nlcs + mixed[2].nlcs == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(mixed[0].article_id == "a");
}

TEST_CASE("spearman examples") {
    CHECK(stats::spearman(vec({1, 2, 3}), vec({10, 20, 30})) == 1.0);
    CHECK(stats::spearman(vec({1, 2, 3}), vec({3, 2, 1})) == -1.0);
    const auto tied = stats::spearman(vec({1, 2, 2, 4}), vec({1, 3, 2, 4}));
    CHECK(tied == doctest::Approx(testing::brute_spearman({1, 2, 2, 4}, {1, 3, 2, 4})).epsilon(1e-12));
    CHECK(stats::average_ranks(vec({1, 2, 2, 4})) == vec({1, 2.5, 2.5, 4}));
    CHECK_THROWS_AS(stats::spearman(vec({1, 1, 1}), vec({1, 2, 3})), stats::UndefinedCorrelation);
    CHECK_THROWS_AS(stats::spearman(vec({1, 2}), vec({1, 2})), stats::UndefinedCorrelation);
    CHECK_THROWS_AS(stats::spearman(vec({1, 2, NAN}), vec({1, 2, 3})), stats::UndefinedCorrelation);
}

TEST_CASE("spearman matches the brute-force oracle on random inputs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 30);
        std::vector<double> x(n), y(n);
        const bool ties = trial % 3 == 0;
        for (int i = 0; i < n; ++i) {
            x[i] = ties ? static_cast<double>(rng() % 4) : std::ldexp(static_cast<double>(rng() >> 11), -53);
            y[i] = ties ? static_cast<double>(rng() % 5) : std::ldexp(static_cast<double>(rng() >> 11), -53);
        }
        const VectorXd ex = Eigen::Map<VectorXd>(x.data(), n), ey = Eigen::Map<VectorXd>(y.data(), n);
        if (stats::is_constant(ex) || stats::is_constant(ey)) continue;
        CHECK(stats::spearman(ex, ey) == doctest::Approx(testing::brute_spearman(x, y)).epsilon(1e-12));
        // Monotone transforms leave ranks, and therefore rho, unchanged.
        // Scalar std::exp per element: ties must map to identical values.
        const VectorXd tx = ex.unaryExpr([](double v) { return std::exp(v) * 3.0 + 1.0; });
        CHECK(stats::spearman(tx, ey) == stats::spearman(ex, ey));
    }
}

TEST_CASE("type-7 quantile") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(stats::quantile(v, 0.0) == 1.0);
    CHECK(stats::quantile(v, 1.0) == 4.0);
    CHECK(stats::quantile(v, 0.5) == 2.5);
    CHECK(stats::quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("bootstrap interval") {
    stats::BootstrapConfig cfg;
    cfg.resamples = 500;
    const auto perfect = stats::spearman_with_ci(vec({1, 2, 3, 4, 5, 6}), vec({2, 4, 6, 8, 10, 12}), cfg);
    CHECK(perfect.rho == 1.0);
    CHECK(perfect.ci_low == 1.0);
    CHECK(perfect.ci_high == 1.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    int contains_rho = 0;
    for (int trial = 0; trial < 100; ++trial) {
        VectorXd x(20), y(20);
        for (int i = 0; i < 20; ++i) {
            x[i] = gauss(rng);
            y[i] = x[i] + gauss(rng);
        }
        cfg.seed = static_cast<std::uint64_t>(trial);
        const auto r = stats::spearman_with_ci(x, y, cfg);
        contains_rho += r.ci_low <= r.rho && r.rho <= r.ci_high;
        const auto again = stats::spearman_with_ci(x, y, cfg);
        CHECK(std::memcmp(&again.ci_low, &r.ci_low, sizeof(double)) == 0);
        CHECK(std::memcmp(&again.ci_high, &r.ci_high, sizeof(double)) == 0);
    }
    CHECK(contains_rho == 100);
}

TEST_CASE("bootstrap needs a computable correlation") {
    stats::BootstrapConfig cfg;
    cfg.resamples = 100;
    CHECK_THROWS_AS(stats::bootstrap_ci(vec({1, 1, 1, 1}), vec({1, 2, 3, 4}), cfg), stats::UndefinedCorrelation);
    CHECK_THROWS_AS(stats::bootstrap_ci(vec({1, 2}), vec({1, 2}), cfg), stats::UndefinedCorrelation);
}

TEST_CASE("chi-squared 2x2") {
    const auto r = stats::chi_squared_2x2(30, 70, 10, 90);
    CHECK(std::abs(r.statistic - 12.5) <= 1e-9);
    CHECK(std::abs(r.p_value - testing::simpson_chi2_tail_1df(12.5)) <= 1e-6);
    CHECK(stats::chi_squared_2x2(25, 75, 25, 75).statistic == 0.0);
    CHECK(stats::chi_squared_2x2(25, 75, 25, 75).p_value == 1.0);
    CHECK(stats::chi_squared_2x2(90, 10, 5, 95).statistic == doctest::Approx(145.0).epsilon(0.01));
    CHECK(stats::chi_squared_2x2(90, 10, 5, 95).statistic == stats::chi_squared_2x2(5, 95, 90, 10).statistic);
    CHECK(stats::chi_squared_2x2(30, 70, 10, 90, true).statistic < 12.5);
    CHECK_THROWS_AS(stats::chi_squared_2x2(0, 0, 10, 90), Error);
    CHECK_THROWS_AS(stats::chi_squared_2x2(5, 0, 10, 0), Error);
}

TEST_CASE("chi-squared tail against numerical integration") {
    for (double x : {0.1, 1.0, 3.841458820694124, 6.63, 20.0}) {
        CHECK(std::abs(stats::chi_squared_sf_1df(x) - testing::simpson_chi2_tail_1df(x)) <= 1e-8);
    }
    CHECK(stats::chi_squared_sf_1df(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("Benjamini-Hochberg") {
    CHECK(stats::bh_select(std::vector<double>{0.01, 0.02, 0.03, 0.04}, 0.05) == std::vector<bool>{true, true, true, true});
    CHECK(stats::bh_select(std::vector<double>{0.9, 0.8}, 0.05) == std::vector<bool>{false, false});
    CHECK(stats::bh_select(std::vector<double>{0.001, 0.9}, 0.05) == std::vector<bool>{true, false});
    // Step-up: p(2)=0.03 passes 2*0.05/3 even though it fails 0.05/3 alone.
    CHECK(stats::bh_select(std::vector<double>{0.03, 0.001, 0.5}, 0.05) == std::vector<bool>{true, true, false});
    CHECK(stats::bh_select(std::vector<double>{}, 0.05).empty());
}

TEST_CASE("median") {
    CHECK(stats::median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(stats::median(std::vector<double>{4, 1, 2, 3}) == 2.5);
    CHECK_THROWS_AS(stats::median(std::vector<double>{}), Error);
}
