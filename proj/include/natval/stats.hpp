#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "natval/error.hpp"

namespace natval::stats {

/// Correlation is undefined for the given inputs (constant vector, too few pairs).
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

template <typename Derived>
bool is_constant(const Eigen::DenseBase<Derived>& v) {
    return v.size() == 0 || (v.derived().array() == v.derived().coeff(0)).all();
}

/// 1-based ranks; tied values share the mean of the ranks they span.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> average_ranks(const Eigen::DenseBase<Derived>& values) {
    using Scalar = typename Derived::Scalar;
    static_assert(std::is_floating_point_v<Scalar>, "ranks need a floating-point scalar");
    const Eigen::Index n = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values.coeff(a) < values.coeff(b); });

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i + 1;
        while (j < n && values.coeff(order[j]) == values.coeff(order[i])) ++j;
        // positions i..j-1 hold ranks i+1..j
        const Scalar mean_rank = static_cast<Scalar>(i + 1 + j) / Scalar(2);
        for (Eigen::Index k = i; k < j; ++k) ranks(order[k]) = mean_rank;
        i = j;
    }
    return ranks;
}

/// Pearson product-moment correlation; throws UndefinedCorrelation for a constant input.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    static_assert(std::is_same_v<Scalar, typename DerivedY::Scalar>, "scalar types must match");
    if (x.size() != y.size()) throw UndefinedCorrelation("vectors differ in length");
    const auto xc = (x.array() - x.mean()).matrix().eval();
    const auto yc = (y.array() - y.mean()).matrix().eval();
    const Scalar sxx = xc.squaredNorm();
    const Scalar syy = yc.squaredNorm();
    if (!(sxx > Scalar(0)) || !(syy > Scalar(0))) throw UndefinedCorrelation("constant vector");
    const Scalar r = xc.dot(yc) / std::sqrt(sxx * syy);
    return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Spearman rank correlation with average ranks for ties. Requires at least 3 pairs
/// and two non-constant vectors of equal length.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar spearman(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    if (x.size() != y.size()) throw UndefinedCorrelation("vectors differ in length");
    if (x.size() < 3) throw UndefinedCorrelation("need at least 3 pairs");
    if (!x.allFinite() || !y.allFinite()) throw UndefinedCorrelation("non-finite value");
    if (is_constant(x) || is_constant(y)) throw UndefinedCorrelation("constant vector");
    return pearson(average_ranks(x), average_ranks(y));
}

struct BootstrapConfig {
    int resamples = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    /// Redraws allowed per resample when it comes out constant.
    int max_redraws = 100;
};

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
    std::size_t effective_resamples = 0;
};

struct CorrelationResult {
    double rho = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;
    int resamples = 0;
    std::uint64_t seed = 0;
};

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending and nonempty.
double quantile(std::span<const double> sorted, double q);

/// Percentile bootstrap interval for Spearman's rho, resampling pairs with
/// replacement. Resample b draws from its own substream of `seed`, so the result is
/// bit-reproducible. Constant resamples are redrawn; throws UndefinedCorrelation when
/// fewer than half of the resamples are usable.
ConfidenceInterval bootstrap_ci(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const BootstrapConfig& cfg);

CorrelationResult spearman_with_ci(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, const BootstrapConfig& cfg);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant_after_fdr = false;
};

/// Upper tail of the chi-squared distribution with one degree of freedom.
double chi_squared_sf_1df(double statistic);

/// Pearson chi-squared test of independence on the table (a b / c d), 1 df.
/// Throws natval::Error when any row or column total is zero.
TestResult chi_squared_2x2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d, bool yates = false);

/// Benjamini-Hochberg step-up selection at level alpha.
std::vector<bool> bh_select(std::span<const double> p_values, double alpha);

/// Middle order statistic; mean of the two middle values for even n.
double median(std::span<const double> values);

}  // namespace natval::stats
