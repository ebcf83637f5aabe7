// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "natval/analysis.hpp"
#include "natval/biblio.hpp"
#include "natval/csv.hpp"
#include "natval/pipeline.hpp"
#include "natval/scorer.hpp"
#include "natval/stats.hpp"
#include "natval/wata.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace natval;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kWeightedTol = 1e-12;
constexpr double kNlcsMeanTol = 1e-9;
constexpr double kSpearmanTol = 1e-9;
constexpr double kChiStatTol = 1e-9;
constexpr double kChiPTol = 1e-6;
constexpr int kNullCoverageMin = 90;
constexpr double kMaxMeanFalseSelections = 1.0;
constexpr double kStrongRhoMin = 0.8;
constexpr double kWeakRhoMax = 0.2;

constexpr double kLimitAc2 = 1.0;
constexpr double kLimitAc3 = 5.0;
constexpr double kLimitAc5 = 30.0;
constexpr double kLimitAc6 = 10.0;
constexpr double kLimitAc7 = 60.0;
constexpr double kLimitAc8 = 60.0;
constexpr double kLimitInstant = 1.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome with_time(Outcome o, double elapsed, double limit) {
    o.detail += fmt::format("; {:.2f}s (limit {}s)", elapsed, limit);
    if (elapsed >= limit) {
        o.pass = false;
        o.detail += " TOO SLOW";
    }
    return o;
}

Outcome ac1() {
    const double v = weighted_score({{3, 0.6}, {2, 0.4}});
    return {std::abs(v - 2.6) <= kWeightedTol, fmt::format("{{3:0.6, 2:0.4}} -> {:.17g}", v)};
}

Outcome ac2() {
    std::size_t strata = 0, degenerate = 0;
    double worst = 0.0;
    for (int corpus = 0; corpus < 50; ++corpus) {
        std::mt19937_64 rng(1000 + corpus);
        std::vector<CitationInput> in;
        for (auto panel : kAllPanels) {
            for (int year = 2015; year <= 2021; ++year) {
                const auto n = 5 + rng() % 196;
                for (std::size_t i = 0; i < n; ++i) {
                    // Skewed counts: mostly small, with an occasional heavy tail.
                    std::geometric_distribution<int> geo(rng() % 10 == 0 ? 0.01 : 0.25);
                    in.push_back({fmt::format("{}-{}-{}-{}", corpus, to_string(panel), year, i), panel, year, geo(rng)});
                }
            }
        }
        const auto out = compute_nlcs(in);
        std::map<std::pair<Panel, int>, std::pair<double, std::size_t>> sums;
        std::map<std::pair<Panel, int>, bool> any_cited;
        for (const auto& r : out) {
            auto& s = sums[{r.panel, r.year}];
            s.first += r.nlcs;
            ++s.second;
            any_cited[{r.panel, r.year}] |= r.citations > 0;
        }
        for (const auto& [key, s] : sums) {
            if (!any_cited[key]) {
                ++degenerate;
                continue;
            }
            ++strata;
            worst = std::max(worst, std::abs(s.first / static_cast<double>(s.second) - 1.0));
        }
    }
    return {worst <= kNlcsMeanTol && strata > 0,
            fmt::format("{} strata, max |mean-1| = {:.3g} ({} all-zero strata skipped)", strata, worst, degenerate)};
}

Outcome ac3() {
    std::mt19937_64 rng(33);
    double worst = 0.0;
    int invariance_breaks = 0, tied = 0, checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 48);
        const bool ties = rng() % 10 < 3;
        tied += ties;
        Eigen::VectorXd x(n), y(n);
        for (int i = 0; i < n; ++i) {
            if (ties) {
                x[i] = static_cast<double>(rng() % std::max(2, n / 3));
                y[i] = static_cast<double>(rng() % std::max(2, n / 4));
            } else {
                x[i] = std::ldexp(static_cast<double>(rng() >> 11), -53) * 100.0;
                y[i] = std::ldexp(static_cast<double>(rng() >> 11), -53) * 100.0;
            }
        }
        if (stats::is_constant(x) || stats::is_constant(y)) {
            --trial;
            continue;
        }
        ++checked;
        const std::vector<double> vx(x.data(), x.data() + n), vy(y.data(), y.data() + n);
        const double rho = stats::spearman(x, y);
        worst = std::max(worst, std::abs(rho - testing::brute_spearman(vx, vy)));
        const Eigen::VectorXd tx = x.array().cube() + 5.0;
        const Eigen::VectorXd ty = y.unaryExpr([](double v) { return std::exp(0.5 * v); });
        const Eigen::VectorXd neg = -x;
        if (stats::spearman(tx, ty) != rho || stats::spearman(neg, y) != -rho) ++invariance_breaks;
    }
    return {worst <= kSpearmanTol && invariance_breaks == 0,
            fmt::format("{} pairs ({} tied), max |rho - oracle| = {:.3g}, monotone-invariance breaks = {}", checked,
                        tied, worst, invariance_breaks)};
}

Outcome ac4() {
    const auto r = stats::chi_squared_2x2(30, 70, 10, 90);
    const double oracle = testing::simpson_chi2_tail_1df(12.5);
    const auto bh = stats::bh_select(std::vector<double>{0.01, 0.02, 0.03, 0.04}, 0.05);
    const bool all = std::all_of(bh.begin(), bh.end(), [](bool b) { return b; });
    return {std::abs(r.statistic - 12.5) <= kChiStatTol && std::abs(r.p_value - oracle) <= kChiPTol && all,
            fmt::format("chi2 = {:.12g}, p = {:.9g} vs integrated {:.9g}, BH selects {}/4", r.statistic, r.p_value,
                        oracle, std::count(bh.begin(), bh.end(), true))};
}

Outcome ac5() {
    stats::BootstrapConfig cfg;  // B = 1000, alpha = 0.05
    std::mt19937_64 rng(55);
    std::normal_distribution<double> g;

    Eigen::VectorXd x(50), y(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = g(rng);
        y[i] = x[i] + g(rng);
    }
    cfg.seed = 99;
    const auto a = stats::bootstrap_ci(x, y, cfg);
    const auto b = stats::bootstrap_ci(x, y, cfg);
    const bool identical = std::memcmp(&a.low, &b.low, sizeof(double)) == 0 &&
                           std::memcmp(&a.high, &b.high, sizeof(double)) == 0;

    int covered = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd nx(500), ny(500);
        for (int i = 0; i < 500; ++i) {
            nx[i] = g(rng);
            ny[i] = g(rng);
        }
        cfg.seed = static_cast<std::uint64_t>(trial + 1);
        const auto ci = stats::bootstrap_ci(nx, ny, cfg);
        covered += ci.low <= 0.0 && 0.0 <= ci.high;
    }
    return {identical && covered >= kNullCoverageMin,
            fmt::format("repeat CI byte-identical: {}; null coverage {}/100 (need >= {})", identical ? "yes" : "no",
                        covered, kNullCoverageMin)};
}

Outcome ac6() {
    const std::vector<std::string> planted{"plantone", "planttwo", "plantthree", "plantfour", "plantfive"};
    int recovered_all = 0;
    std::size_t false_total = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(600 + seed);
        std::uniform_real_distribution<double> unit;
        std::vector<double> background_rate(200);
        for (auto& r : background_rate) r = 0.03 + 0.5 * unit(rng);

        std::vector<double> scores(200);
        std::vector<wata::Document> docs(200);
        for (int d = 0; d < 200; ++d) {
            const bool high = d % 2 == 0;
            scores[d] = high ? 1.0 + unit(rng) : -1.0 - unit(rng);
            std::string text;
            for (const auto& term : planted) {
                if (unit(rng) < (high ? 0.9 : 0.05)) text += term + " ";
            }
            for (int t = 0; t < 200; ++t) {
                if (unit(rng) < background_rate[t]) text += fmt::format("back{} ", t);
            }
            docs[d] = {fmt::format("doc{}", d), text};
        }
        const auto split = wata::split_by_median(scores);
        std::vector<wata::TermSet> hi, lo;
        for (auto i : split.high) hi.push_back(wata::tokenize(docs[i].text));
        for (auto i : split.low) lo.push_back(wata::tokenize(docs[i].text));
        const auto terms = wata::enriched_terms(hi, lo, {});
        std::set<std::string> selected;
        for (const auto& t : terms) {
            if (t.selected) selected.insert(t.term);
        }
        const bool all = std::all_of(planted.begin(), planted.end(), [&](const auto& p) { return selected.contains(p); });
        recovered_all += all;
        for (const auto& s : selected) false_total += !std::count(planted.begin(), planted.end(), s);
    }
    const double mean_false = static_cast<double>(false_total) / 20.0;
    return {recovered_all == 20 && mean_false <= kMaxMeanFalseSelections,
            fmt::format("all 5 planted terms selected in {}/20 seeds; mean false selections {:.2f} (limit {})",
                        recovered_all, mean_false, kMaxMeanFalseSelections)};
}

std::vector<std::vector<std::string>> data_rows(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    const auto table = csv::read(in);
    std::vector<std::vector<std::string>> out{table.header};
    for (const auto& r : table.rows) out.push_back(r.fields);
    return out;
}

Outcome ac7() {
    testing::CorpusSpec spec;
    spec.seed = 77;
    spec.per_panel = {{Panel::A, 30}, {Panel::B, 30}, {Panel::C, 30}, {Panel::D, 30}};
    const auto articles = testing::synthetic_articles(spec);
    const std::string extra = "repetitions = 5\nprovider.max_in_flight = 4\n";
    ScoreOptions opts;
    opts.mock_seed = 42;

    auto run = [&](const fs::path& dir) {
        const auto cfg = ProjectConfig::load(testing::write_project(dir, articles, extra));
        cmd_ingest(cfg);
        return std::pair{cfg, cmd_score(cfg, opts)};
    };
    const auto dir_a = testing::fresh_dir("acceptance-ac7a");
    const auto dir_b = testing::fresh_dir("acceptance-ac7b");
    const auto [cfg, first] = run(dir_a);
    const auto second = run(dir_b).second;

    const std::vector<std::string> outputs{"score_matrix.csv", "score_samples.csv", "failures.csv", "templates.csv"};
    bool identical = true;
    for (const auto& f : outputs)
        identical &= testing::read_text(dir_a / "out" / f) == testing::read_text(dir_b / "out" / f);

    // Matrix: 120 rows, nine populated score columns in [1, 4].
    const auto rows = data_rows(cfg.output / "score_matrix.csv");
    std::vector<std::size_t> score_cols;
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
        const auto& h = rows[0][c];
        if (h.ends_with("_std") || h.ends_with("_prob") || h.ends_with("_combined")) score_cols.push_back(c);
    }
    std::size_t bad_cells = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        for (auto c : score_cols) {
            const auto& cell = rows[r][c];
            const double v = cell.empty() ? NAN : std::stod(cell);
            bad_cells += !(v >= 1.0 && v <= 4.0);
        }
    }

    // Delete every other cache entry, then resume.
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(cfg.output / "cache" / "mock-42")) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    std::size_t deleted = 0;
    for (std::size_t i = 0; i < entries.size(); i += 2, ++deleted) fs::remove(entries[i]);
    const auto matrix_before = testing::read_text(cfg.output / "score_matrix.csv");
    ScoreOptions resume = opts;
    resume.resume = true;
    const auto third = cmd_score(cfg, resume);
    const bool resumed = third.telemetry.provider_calls == deleted &&
                         third.telemetry.cache_hits == first.requests - deleted &&
                         testing::read_text(cfg.output / "score_matrix.csv") == matrix_before;

    const bool ok = first.requests == 3600 && first.failures == 0 && first.parse_failures == 0 &&
                    rows.size() == 121 && score_cols.size() == 9 && bad_cells == 0 && identical && resumed;
    return {ok, fmt::format("{} requests, {} failures; matrix {} rows x {} score columns, {} cells outside [1,4]; "
                            "rerun byte-identical: {}; after deleting {} of {} cache entries: {} provider calls, "
                            "{} cache hits, matrix unchanged: {}",
                            first.requests, first.failures + first.parse_failures, rows.size() - 1, score_cols.size(),
                            bad_cells, identical ? "yes" : "no", deleted, entries.size(),
                            third.telemetry.provider_calls, third.telemetry.cache_hits, resumed ? "yes" : "no")};
}

Outcome ac8() {
    const auto dir = testing::fresh_dir("acceptance-ac8");
    testing::write_text(dir / "mock_model.conf",
                        "# ValueCountry reads its own trait; QualityCountry is a noisy copy of Quality.\n"
                        "spread = 0.6\n"
                        "latent.Quality = quality\n"
                        "latent.QualityCountry = quality, 0.3\n"
                        "latent.ValueCountry = value\n");
    testing::CorpusSpec spec;
    spec.seed = 2026;
    spec.per_panel = {{Panel::A, 300}, {Panel::B, 300}, {Panel::C, 300}, {Panel::D, 300}};
    const auto cfg = ProjectConfig::load(testing::write_project(
        dir, testing::synthetic_articles(spec), "repetitions = 5\nbootstrap.resamples = 1000\nmock.model = mock_model.conf\n"));
    cmd_ingest(cfg);
    ScoreOptions opts;
    opts.mock_seed = 2026;
    cmd_score(cfg, opts);
    cmd_analyze(cfg);

    // Read the emitted table rather than recomputing.
    const auto rows = data_rows(cfg.output / "correlations.csv");
    bool ok = true;
    std::string detail;
    int seen = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& pair = rows[r][1];
        const bool strong = pair == "Quality~QualityCountry";
        const bool weak = pair == "Quality~ValueCountry";
        if (!strong && !weak) continue;
        ++seen;
        if (rows[r][3].empty()) {
            ok = false;
            detail += fmt::format(" {}[{}] skipped;", pair, rows[r][2]);
            continue;
        }
        const double rho = std::stod(rows[r][3]), lo = std::stod(rows[r][4]), hi = std::stod(rows[r][5]);
        const bool good = strong ? (rho > kStrongRhoMin && lo > 0.0) : (std::abs(rho) < kWeakRhoMax && lo <= 0.0 && hi >= 0.0);
        ok &= good;
        detail += fmt::format(" {} {}: {:.3f} [{:.3f}, {:.3f}]{};", strong ? "Q~QC" : "Q~VC", rows[r][2], rho, lo, hi,
                              good ? "" : " FAIL");
    }
    if (!detail.empty()) detail.pop_back();
    return {ok && seen == 8, fmt::format("panel rho [95% CI]:{}", detail)};
}

Outcome ac9() {
    const auto dir = testing::fresh_dir("acceptance-ac9");
    testing::CorpusSpec spec;
    spec.seed = 99;
    spec.per_panel = {{Panel::A, 25}, {Panel::B, 25}, {Panel::C, 25}, {Panel::D, 21}};
    const auto cfg = ProjectConfig::load(testing::write_project(
        dir, testing::synthetic_articles(spec), "repetitions = 1\nbootstrap.resamples = 200\naudit.k = 50\nwata.min_docs = 3\n"));
    cmd_ingest(cfg);
    ScoreOptions opts;
    opts.mock_seed = 21;
    cmd_score(cfg, opts);
    cmd_analyze(cfg);

    std::size_t k_d = 0, emitted_d = 0, skipped_d = 0, n_d = 0;
    for (const auto& row : data_rows(cfg.output / "mention_audit.csv")) {
        if (row.size() > 2 && row[0] == "D" && row[1] == "top") k_d = std::stoul(row[2]);
    }
    const auto corr = data_rows(cfg.output / "correlations.csv");
    for (std::size_t r = 1; r < corr.size(); ++r) {
        if (corr[r][2] != "D") continue;
        if (corr[r][3].empty()) {
            ++skipped_d;
        } else {
            ++emitted_d;
            n_d = std::stoul(corr[r][6]);
        }
    }
    return {k_d == 10 && emitted_d > 0 && skipped_d == 0 && n_d == 21,
            fmt::format("Panel D (21 articles): audit k = {}, correlations emitted {} (n = {}), skipped {}", k_d,
                        emitted_d, n_d, skipped_d)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double limit;
    };
    const std::vector<Criterion> criteria{
        {"AC1 probability-weighted score worked example", ac1, kLimitInstant},
        {"AC2 NLCS stratum mean is 1", ac2, kLimitAc2},
        {"AC3 Spearman matches brute-force rank oracle", ac3, kLimitAc3},
        {"AC4 chi-squared desk check and BH example", ac4, kLimitInstant},
        {"AC5 bootstrap determinism and null coverage", ac5, kLimitAc5},
        {"AC6 WATA planted-term recovery", ac6, kLimitAc6},
        {"AC7 end-to-end mock pipeline", ac7, kLimitAc7},
        {"AC8 correlation structure under a controlled mock", ac8, kLimitAc8},
        {"AC9 Panel D small-n handling", ac9, kLimitInstant},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        Timer t;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        o = with_time(o, t.seconds(), c.limit);
        failed += !o.pass;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
