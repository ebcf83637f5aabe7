#include "natval/scorer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <regex>

#include <fmt/format.h>

#include "natval/csv.hpp"

namespace natval {

namespace {

const std::regex& score_pattern() {
    static const std::regex re(R"(([0-9]+)\*|score of\s+([0-9]+))", std::regex::icase | std::regex::optimize);
    return re;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string{}; }

}  // namespace

int extract_score(const std::string& report) {
    if (report.empty()) throw ParseFailure("empty report", report);
    std::smatch last;
    bool found = false;
    for (auto it = std::sregex_iterator(report.begin(), report.end(), score_pattern()); it != std::sregex_iterator();
         ++it) {
        last = *it;
        found = true;
    }
    if (!found) throw ParseFailure("no score pattern in report", report);
    const std::string digits = last[1].matched ? last[1].str() : last[2].str();
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || value < 1 || value > 4)
        throw ParseFailure(fmt::format("score '{}' outside 1..4", digits), report);
    return value;
}

std::map<int, double> score_distribution(const std::vector<TokenProbability>& tokens) {
    std::map<int, double> out;
    for (const auto& tp : tokens) {
        std::string core;
        for (char c : tp.token) {
            if (c != ' ' && c != '*' && c != '\n' && c != '\t') core.push_back(c);
        }
        if (core.size() == 1 && core[0] >= '1' && core[0] <= '4') out[core[0] - '0'] += tp.probability;
    }
    return out;
}

double weighted_score(const std::map<int, double>& distribution) {
    if (distribution.empty()) throw Error("empty score distribution");
    double mass = 0.0;
    for (const auto& [score, p] : distribution) {
        if (score < 1 || score > 4) throw Error(fmt::format("score key {} outside 1..4", score));
        if (!(p >= 0.0)) throw Error(fmt::format("negative probability {} for score {}", p, score));
        mass += p;
    }
    if (!(mass > 0.0)) throw Error("score distribution has zero mass");
    double expected = 0.0;
    for (const auto& [score, p] : distribution) expected += score * (p / mass);
    return expected;
}

ScoreSample to_sample(const BatchOutcome& outcome) {
    const auto& req = outcome.request;
    ScoreSample s;
    s.article_id = req.article_id;
    s.regime = req.prompt.regime;
    s.variant = req.prompt.variant;
    s.run_index = req.run_index;
    s.template_version = req.prompt.template_version;
    if (!outcome.ok()) {
        const auto& f = std::get<FailureRecord>(outcome.result);
        s.fingerprint = f.fingerprint;
        s.failure = "request failed: " + f.error;
        return s;
    }
    const auto& resp = outcome.response();
    s.fingerprint = resp.fingerprint;
    try {
        if (s.variant == Variant::Report) {
            s.parsed_score = extract_score(resp.text);
        } else {
            if (!resp.token_probabilities) throw Error("no token probabilities");
            s.weighted_score = weighted_score(score_distribution(*resp.token_probabilities));
        }
    } catch (const Error& e) {
        s.failure = e.what();
    }
    return s;
}

std::vector<ArticleScoreSummary> aggregate(const std::vector<ScoreSample>& samples, int repetitions) {
    if (repetitions < 1) throw Error("repetitions must be >= 1");
    struct Group {
        std::vector<double> std_values, prob_values;
        std::size_t std_total = 0, prob_total = 0, failures = 0;
    };
    std::map<std::pair<std::string, Regime>, Group> groups;
    for (const auto& s : samples) {
        auto& g = groups[{s.article_id, s.regime}];
        const bool report = s.variant == Variant::Report;
        if (++(report ? g.std_total : g.prob_total) > static_cast<std::size_t>(repetitions))
            throw Error(fmt::format("article '{}' has more than {} {} samples for {}", s.article_id, repetitions,
                                    to_string(s.variant), to_string(s.regime)));
        if (!s.usable()) {
            ++g.failures;
            continue;
        }
        (report ? g.std_values : g.prob_values).push_back(s.value());
    }

    // Summing in sorted order makes the result independent of sample order.
    auto sorted_sum = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) sum += x;
        return sum;
    };

    std::vector<ArticleScoreSummary> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        ArticleScoreSummary s;
        s.article_id = key.first;
        s.regime = key.second;
        s.std_runs = g.std_values.size();
        s.prob_runs = g.prob_values.size();
        s.failures = g.failures;
        std::vector<double> all = g.std_values;
        all.insert(all.end(), g.prob_values.begin(), g.prob_values.end());
        s.std_mean = s.std_runs ? sorted_sum(g.std_values) / static_cast<double>(s.std_runs) : kNaN;
        s.prob_mean = s.prob_runs ? sorted_sum(g.prob_values) / static_cast<double>(s.prob_runs) : kNaN;
        s.combined = all.empty() ? kNaN : sorted_sum(all) / static_cast<double>(all.size());
        s.incomplete = s.std_runs == 0 || s.prob_runs == 0;
        out.push_back(s);
    }
    return out;
}

double ScoreMatrixRow::std_mean(Regime r) const {
    auto it = regimes.find(r);
    return it == regimes.end() ? kNaN : it->second.std_mean;
}

double ScoreMatrixRow::prob_mean(Regime r) const {
    auto it = regimes.find(r);
    return it == regimes.end() ? kNaN : it->second.prob_mean;
}

double ScoreMatrixRow::combined(Regime r) const {
    auto it = regimes.find(r);
    return it == regimes.end() ? kNaN : it->second.combined;
}

bool ScoreMatrixRow::complete(Regime r) const {
    auto it = regimes.find(r);
    return it != regimes.end() && !it->second.incomplete && std::isfinite(it->second.combined);
}

std::vector<ScoreMatrixRow> build_score_matrix(const std::vector<ArticleScoreSummary>& summaries,
                                               const std::map<std::string, Panel>& panels) {
    std::map<std::string, ScoreMatrixRow> rows;
    for (const auto& [id, panel] : panels) {
        rows[id].article_id = id;
        rows[id].panel = panel;
    }
    for (const auto& s : summaries) {
        auto it = rows.find(s.article_id);
        if (it == rows.end()) throw Error(fmt::format("score summary for unknown article '{}'", s.article_id));
        it->second.regimes[s.regime] = s;
    }
    std::vector<ScoreMatrixRow> out;
    out.reserve(rows.size());
    for (auto& [id, row] : rows) out.push_back(std::move(row));
    return out;
}

void write_score_matrix(std::ostream& out, const std::vector<ScoreMatrixRow>& rows) {
    std::vector<std::string> header{"article_id", "panel"};
    for (auto r : kAllRegimes) {
        for (const char* kind : {"std", "prob", "combined"}) header.push_back(fmt::format("{}_{}", to_string(r), kind));
    }
    for (auto r : kAllRegimes) header.push_back(fmt::format("{}_incomplete", to_string(r)));
    csv::write_row(out, header);
    for (const auto& row : rows) {
        std::vector<std::string> f{row.article_id, std::string(to_string(row.panel))};
        for (auto r : kAllRegimes) {
            f.push_back(format_value(row.std_mean(r)));
            f.push_back(format_value(row.prob_mean(r)));
            f.push_back(format_value(row.combined(r)));
        }
        for (auto r : kAllRegimes) f.push_back(row.complete(r) ? "0" : "1");
        csv::write_row(out, f);
    }
}

std::vector<ScoreMatrixRow> read_score_matrix(std::istream& in) {
    const auto table = csv::read(in);
    auto col = [&](const std::string& name) {
        auto c = table.column(name);
        if (!c) throw Error(fmt::format("score matrix lacks column '{}'", name));
        return *c;
    };
    const auto id_col = col("article_id");
    const auto panel_col = col("panel");
    auto number = [](const std::string& s) {
        if (s.empty()) return kNaN;
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw Error(fmt::format("bad number '{}' in score matrix", s));
        }
    };
    std::vector<ScoreMatrixRow> out;
    for (const auto& rec : table.rows) {
        if (rec.fields.size() != table.header.size())
            throw Error(fmt::format("score matrix line {}: wrong field count", rec.line));
        ScoreMatrixRow row;
        row.article_id = rec.fields[id_col];
        row.panel = panel_from_string(rec.fields[panel_col]);
        for (auto r : kAllRegimes) {
            ArticleScoreSummary s;
            s.article_id = row.article_id;
            s.regime = r;
            s.std_mean = number(rec.fields[col(fmt::format("{}_std", to_string(r)))]);
            s.prob_mean = number(rec.fields[col(fmt::format("{}_prob", to_string(r)))]);
            s.combined = number(rec.fields[col(fmt::format("{}_combined", to_string(r)))]);
            s.incomplete = rec.fields[col(fmt::format("{}_incomplete", to_string(r)))] != "0";
            if (std::isfinite(s.std_mean) || std::isfinite(s.prob_mean) || std::isfinite(s.combined))
                row.regimes[r] = s;
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_samples_csv(std::ostream& out, const std::vector<ScoreSample>& samples) {
    csv::write_row(out, {"article_id", "regime", "variant", "run_index", "score", "failure", "fingerprint",
                         "template_version"});
    for (const auto& s : samples) {
        csv::write_row(out, {s.article_id, std::string(to_string(s.regime)), std::string(to_string(s.variant)),
                             std::to_string(s.run_index), s.usable() ? fmt::format("{}", s.value()) : std::string{},
                             s.failure, s.fingerprint, s.template_version});
    }
}

}  // namespace natval
