#include "natval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "natval/csv.hpp"
#include "natval/error.hpp"
#include "natval/hash.hpp"
#include "natval/rng.hpp"

namespace natval::analysis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string{}; }
std::string fixed(double v, int digits = 3) { return std::isfinite(v) ? fmt::format("{:.{}f}", v, digits) : "n/a"; }

}  // namespace

std::vector<PanelFamilies> collect_families(const std::vector<ScoreMatrixRow>& matrix,
                                            const std::map<std::string, double>& nlcs) {
    std::vector<PanelFamilies> out;
    for (auto panel : kAllPanels) {
        std::vector<const ScoreMatrixRow*> rows;
        for (const auto& r : matrix) {
            if (r.panel == panel) rows.push_back(&r);
        }
        if (rows.empty()) continue;
        PanelFamilies pf;
        pf.panel = panel;
        const auto n = static_cast<Eigen::Index>(rows.size());
        auto column = [&](auto&& get) {
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v(i) = get(*rows[static_cast<std::size_t>(i)]);
            return v;
        };
        for (const auto* r : rows) pf.article_ids.push_back(r->article_id);
        for (auto regime : kAllRegimes) {
            const std::string name(to_string(regime));
            pf.families[name + ".std"] = column([&](const ScoreMatrixRow& r) { return r.std_mean(regime); });
            pf.families[name + ".prob"] = column([&](const ScoreMatrixRow& r) { return r.prob_mean(regime); });
            pf.families[name] = column([&](const ScoreMatrixRow& r) { return r.combined(regime); });
        }
        pf.families["NLCS"] = column([&](const ScoreMatrixRow& r) {
            auto it = nlcs.find(r.article_id);
            return it == nlcs.end() ? kNaN : it->second;
        });
        out.push_back(std::move(pf));
    }
    return out;
}

std::vector<CorrelationRow> correlation_matrix(std::span<const PanelFamilies> panels,
                                               const stats::BootstrapConfig& cfg) {
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> pairs;
    for (auto r : kAllRegimes) {
        const std::string name(to_string(r));
        pairs.push_back({"std_vs_prob", {name + ".std", name + ".prob"}});
    }
    for (std::size_t i = 0; i < kAllRegimes.size(); ++i) {
        for (std::size_t j = i + 1; j < kAllRegimes.size(); ++j)
            pairs.push_back({"between_regimes", {std::string(to_string(kAllRegimes[i])), std::string(to_string(kAllRegimes[j]))}});
    }
    for (auto r : kAllRegimes) pairs.push_back({"vs_nlcs", {std::string(to_string(r)), "NLCS"}});

    std::vector<CorrelationRow> out;
    for (const auto& [block, pair] : pairs) {
        for (const auto& pf : panels) {
            CorrelationRow row;
            row.block = block;
            row.first = pair.first;
            row.second = pair.second;
            row.panel = pf.panel;
            const auto fx = pf.families.find(pair.first);
            const auto fy = pf.families.find(pair.second);
            if (fx == pf.families.end() || fy == pf.families.end()) {
                row.skip_reason = "score family not available";
                out.push_back(std::move(row));
                continue;
            }
            const auto& x = fx->second;
            const auto& y = fy->second;
            std::vector<Eigen::Index> keep;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (std::isfinite(x(i)) && std::isfinite(y(i))) keep.push_back(i);
            }
            row.n = keep.size();
            if (keep.size() < 3) {
                row.skip_reason = fmt::format("only {} complete article(s); need at least 3", keep.size());
                out.push_back(std::move(row));
                continue;
            }
            const Eigen::VectorXd xs = x(keep);
            const Eigen::VectorXd ys = y(keep);
            auto local = cfg;
            local.seed = substream_seed(cfg.seed, fnv1a64(fmt::format("{}|{}", row.pair(), to_string(pf.panel))));
            try {
                row.result = stats::spearman_with_ci(xs, ys, local);
            } catch (const stats::UndefinedCorrelation& e) {
                row.skip_reason = e.what();
            }
            out.push_back(std::move(row));
        }
    }
    return out;
}

DiffResult indicator_difference(const std::vector<ScoreMatrixRow>& matrix, Regime minuend, Regime subtrahend) {
    DiffResult out;
    for (const auto& row : matrix) {
        if (!row.complete(minuend) || !row.complete(subtrahend)) {
            ++out.excluded;
            continue;
        }
        out.diffs.push_back({row.article_id, row.panel, row.combined(minuend) - row.combined(subtrahend)});
    }
    return out;
}

TopBottom top_bottom(std::span<const IndicatorDiff> diffs, std::size_t k) {
    std::vector<IndicatorDiff> sorted(diffs.begin(), diffs.end());
    std::sort(sorted.begin(), sorted.end(), [](const IndicatorDiff& a, const IndicatorDiff& b) {
        if (a.diff != b.diff) return a.diff < b.diff;
        return a.article_id < b.article_id;
    });
    TopBottom tb;
    tb.k = std::min(k, sorted.size() / 2);
    tb.shrunk = tb.k < k;
    tb.bottom.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(tb.k));
    tb.top.assign(sorted.rbegin(), sorted.rbegin() + static_cast<std::ptrdiff_t>(tb.k));
    return tb;
}

namespace {

bool boundary(std::string_view text, std::size_t pos) {
    if (pos >= text.size()) return true;
    const auto c = static_cast<unsigned char>(text[pos]);
    return !(std::isalnum(c) || c >= 0x80);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool contains_word(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) {
        if ((pos == 0 || boundary(haystack, pos - 1)) && boundary(haystack, pos + needle.size())) return true;
    }
    return false;
}

}  // namespace

bool mentions_country(std::string_view title, std::string_view abstract, const CountryProfile& profile) {
    const auto t = lower(title);
    const auto a = lower(abstract);
    for (const auto& alias : profile.mention_aliases) {
        const auto needle = lower(alias);
        if (contains_word(t, needle) || contains_word(a, needle)) return true;
    }
    return false;
}

bool mentions_country(const Article& article, const CountryProfile& profile) {
    return mentions_country(article.title, article.abstract, profile);
}

double mention_rate(std::span<const Article> articles, const CountryProfile& profile) {
    if (articles.empty()) throw Error("mention rate of an empty article set");
    const auto hits = std::count_if(articles.begin(), articles.end(),
                                    [&](const Article& a) { return mentions_country(a, profile); });
    return static_cast<double>(hits) / static_cast<double>(articles.size());
}

std::vector<MentionAudit> audit_mentions(std::span<const IndicatorDiff> diffs,
                                         const std::map<std::string, const Article*>& articles,
                                         const CountryProfile& profile, std::size_t k) {
    std::vector<MentionAudit> out;
    for (auto panel : kAllPanels) {
        std::vector<IndicatorDiff> in_panel;
        for (const auto& d : diffs) {
            if (d.panel == panel) in_panel.push_back(d);
        }
        if (in_panel.empty()) continue;
        const auto tb = top_bottom(in_panel, k);
        for (const auto& [group, members] : {std::pair{"top", &tb.top}, std::pair{"bottom", &tb.bottom}}) {
            MentionAudit audit;
            audit.panel = panel;
            audit.group = group;
            audit.k = tb.k;
            for (const auto& d : *members) {
                auto it = articles.find(d.article_id);
                if (it == articles.end()) throw Error(fmt::format("no article text for '{}'", d.article_id));
                const bool hit = mentions_country(*it->second, profile);
                audit.mention_count += hit ? 1 : 0;
                audit.members.push_back({d, hit});
            }
            out.push_back(std::move(audit));
        }
    }
    return out;
}

void write_correlations_csv(std::ostream& out, const std::vector<CorrelationRow>& rows) {
    csv::write_row(out, {"block", "pair", "panel", "rho", "ci_low", "ci_high", "n", "resamples", "skip_reason"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.block, r.pair(), std::string(to_string(r.panel)), r.result ? num(r.result->rho) : "",
                             r.result ? num(r.result->ci_low) : "", r.result ? num(r.result->ci_high) : "",
                             std::to_string(r.n), r.result ? std::to_string(r.result->resamples) : "", r.skip_reason});
    }
}

void write_diffs_csv(std::ostream& out, const std::vector<IndicatorDiff>& diffs) {
    csv::write_row(out, {"article_id", "panel", "diff"});
    for (const auto& d : diffs) csv::write_row(out, {d.article_id, std::string(to_string(d.panel)), num(d.diff)});
}

void write_audit_csv(std::ostream& out, const std::vector<MentionAudit>& audits) {
    csv::write_row(out, {"panel", "group", "k", "rank", "article_id", "diff", "mentions_country"});
    for (const auto& a : audits) {
        for (std::size_t i = 0; i < a.members.size(); ++i) {
            const auto& m = a.members[i];
            csv::write_row(out, {std::string(to_string(a.panel)), a.group, std::to_string(a.k), std::to_string(i + 1),
                                 m.diff.article_id, num(m.diff.diff), m.mentions ? "1" : "0"});
        }
    }
}

void write_summary_markdown(std::ostream& out, const SummaryInput& in) {
    if (!in.matrix || !in.correlations || !in.audits || !in.wata) throw Error("summary input incomplete");
    const auto& matrix = *in.matrix;

    out << "# Score summary: " << in.country << "\n\n";
    out << "## Mean scores by panel\n\n";
    out << "| Score | A | B | C | D |\n|---|---|---|---|---|\n";
    auto mean_of = [&](Panel p, auto&& get) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : matrix) {
            const double v = get(r);
            if (r.panel == p && std::isfinite(v)) {
                sum += v;
                ++n;
            }
        }
        return n ? sum / static_cast<double>(n) : kNaN;
    };
    for (auto regime : kAllRegimes) {
        const std::pair<const char*, double (ScoreMatrixRow::*)(Regime) const> kinds[] = {
            {"standard", &ScoreMatrixRow::std_mean},
            {"probability", &ScoreMatrixRow::prob_mean},
            {"combined", &ScoreMatrixRow::combined}};
        for (const auto& [label, getter] : kinds) {
            out << "| " << to_string(regime) << " (" << label << ")";
            for (auto p : kAllPanels) out << " | " << fixed(mean_of(p, [&](const ScoreMatrixRow& r) { return (r.*getter)(regime); }), 2);
            out << " |\n";
        }
    }
    out << "| Articles";
    for (auto p : kAllPanels)
        out << " | " << std::count_if(matrix.begin(), matrix.end(), [&](const ScoreMatrixRow& r) { return r.panel == p; });
    out << " |\n\n";

    out << "## Share of articles mentioning " << in.country << "\n\n| Panel | Rate |\n|---|---|\n";
    for (const auto& [p, rate] : in.mention_rates) out << "| " << to_string(p) << " | " << fixed(100.0 * rate, 1) << "% |\n";
    out << "\n";

    const std::pair<const char*, const char*> blocks[] = {
        {"std_vs_prob", "Standard vs probability scores (five-run means)"},
        {"between_regimes", "Between instruction regimes (combined scores)"},
        {"vs_nlcs", "Regimes vs NLCS (combined scores)"}};
    for (const auto& [block, title] : blocks) {
        out << "## " << title << "\n\n| Pair | Panel | n | rho | 95% CI |\n|---|---|---|---|---|\n";
        for (const auto& r : *in.correlations) {
            if (r.block != block) continue;
            out << "| " << r.pair() << " | " << to_string(r.panel) << " | " << r.n << " | ";
            if (r.result)
                out << fixed(r.result->rho) << " | [" << fixed(r.result->ci_low) << ", " << fixed(r.result->ci_high) << "] |\n";
            else
                out << "skipped | " << r.skip_reason << " |\n";
        }
        out << "\n";
    }

    out << "## Country mentions among extreme indicator differences\n\n";
    out << "Indicator difference = Quality - ValueCountry (combined scores); " << in.diff_excluded
        << " incomplete article(s) excluded.\n\n| Panel | Group | k | Mentions |\n|---|---|---|---|\n";
    for (const auto& a : *in.audits)
        out << "| " << to_string(a.panel) << " | " << a.group << " | " << a.k << " | " << a.mention_count << " |\n";
    out << "\n";

    out << "## Word association terms\n\n";
    for (const auto& w : *in.wata) {
        out << "### High group: " << w.direction << "\n\n";
        if (!w.note.empty()) {
            out << w.note << "\n\n";
            continue;
        }
        std::vector<std::string> sel;
        for (const auto& t : w.terms) {
            if (t.selected) sel.push_back(t.term);
        }
        out << sel.size() << " selected term(s) of " << w.terms.size() << " tested";
        if (!sel.empty()) {
            out << ": ";
            for (std::size_t i = 0; i < sel.size(); ++i) out << (i ? ", " : "") << sel[i];
        }
        out << "\n\n";
    }
}

}  // namespace natval::analysis
