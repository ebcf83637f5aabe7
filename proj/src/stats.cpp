#include "natval/stats.hpp"

#include <random>

#include <fmt/format.h>

#include "natval/rng.hpp"

namespace natval::stats {

double quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ConfidenceInterval bootstrap_ci(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const BootstrapConfig& cfg) {
    if (x.size() != y.size()) throw UndefinedCorrelation("vectors differ in length");
    if (x.size() < 3) throw UndefinedCorrelation("need at least 3 pairs for a bootstrap interval");
    if (cfg.resamples < 1) throw Error("bootstrap needs at least one resample");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(fmt::format("alpha {} outside (0, 1)", cfg.alpha));

    const auto n = static_cast<std::uint64_t>(x.size());
    Eigen::VectorXi idx(x.size());
    Eigen::VectorXd xr(x.size()), yr(x.size());
    std::vector<double> rhos;
    rhos.reserve(static_cast<std::size_t>(cfg.resamples));

    for (int b = 0; b < cfg.resamples; ++b) {
        std::mt19937_64 rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
            for (Eigen::Index i = 0; i < idx.size(); ++i) idx(i) = static_cast<int>(uniform_below(rng, n));
            xr = x(idx);
            yr = y(idx);
            if (is_constant(xr) || is_constant(yr)) continue;
            rhos.push_back(pearson(average_ranks(xr), average_ranks(yr)));
            break;
        }
    }
    if (2 * rhos.size() < static_cast<std::size_t>(cfg.resamples))
        throw UndefinedCorrelation(
            fmt::format("only {} of {} bootstrap resamples were non-degenerate", rhos.size(), cfg.resamples));

    std::sort(rhos.begin(), rhos.end());
    return ConfidenceInterval{quantile(rhos, cfg.alpha / 2.0), quantile(rhos, 1.0 - cfg.alpha / 2.0), rhos.size()};
}

CorrelationResult spearman_with_ci(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, const BootstrapConfig& cfg) {
    CorrelationResult r;
    r.rho = spearman(x, y);
    const auto ci = bootstrap_ci(x, y, cfg);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    r.n = static_cast<std::size_t>(x.size());
    r.resamples = cfg.resamples;
    r.seed = cfg.seed;
    return r;
}

double chi_squared_sf_1df(double statistic) {
    if (!(statistic >= 0.0)) throw Error(fmt::format("chi-squared statistic {} is negative", statistic));
    // X ~ chi2(1) <=> sqrt(X) ~ |N(0,1)|, so P(X > s) = erfc(sqrt(s / 2)).
    return std::erfc(std::sqrt(statistic / 2.0));
}

TestResult chi_squared_2x2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d, bool yates) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw Error("contingency counts must be non-negative");
    const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0)
        throw Error(fmt::format("zero margin in table ({} {} / {} {})", a, b, c, d));
    const double total = static_cast<double>(r1 + r2);
    // Closed form of sum (O - E)^2 / E; exactly symmetric under row and column swaps.
    double diff = std::abs(static_cast<double>(a * d - b * c));
    if (yates) diff = std::max(0.0, diff - total / 2.0);
    const double denom =
        (static_cast<double>(r1) * static_cast<double>(r2)) * (static_cast<double>(c1) * static_cast<double>(c2));
    TestResult t;
    t.statistic = total * diff * diff / denom;
    t.p_value = chi_squared_sf_1df(t.statistic);
    return t;
}

std::vector<bool> bh_select(std::span<const double> p_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(fmt::format("alpha {} outside (0, 1)", alpha));
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(fmt::format("p-value {} outside [0, 1]", p));
    }
    const std::size_t m = p_values.size();
    std::vector<double> sorted(p_values.begin(), p_values.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = 0;
    for (std::size_t i = 1; i <= m; ++i) {
        if (sorted[i - 1] <= static_cast<double>(i) * alpha / static_cast<double>(m)) k = i;
    }
    std::vector<bool> out(m, false);
    if (k == 0) return out;
    const double threshold = sorted[k - 1];
    for (std::size_t i = 0; i < m; ++i) out[i] = p_values[i] <= threshold;
    return out;
}

double median(std::span<const double> values) {
    if (values.empty()) throw Error("median of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace natval::stats
