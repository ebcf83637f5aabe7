#include "natval/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "natval/analysis.hpp"
#include "natval/biblio.hpp"
#include "natval/csv.hpp"
#include "natval/hash.hpp"
#include "natval/keyvalue.hpp"
#include "natval/mock_provider.hpp"
#include "natval/scorer.hpp"

namespace natval {

namespace fs = std::filesystem;

ProjectConfig ProjectConfig::load(const fs::path& path) {
    const auto doc = KeyValueDoc::load(path);
    const auto base = fs::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    auto optional_path = [&](const std::string& key) -> std::optional<fs::path> {
        auto v = doc.get(key);
        if (!v || v->empty()) return std::nullopt;
        return resolve(*v);
    };

    ProjectConfig c;
    c.config_path = fs::absolute(path);
    c.config_hash = sha256_file(path).substr(0, 16);
    c.corpus = resolve(doc.require("corpus"));
    c.profile = resolve(doc.require("profile"));
    c.templates = resolve(doc.require("templates"));
    c.output = resolve(doc.require("output"));
    c.overrides = optional_path("overrides");
    c.header_map = optional_path("header_map");
    c.asjc_names = optional_path("asjc_names");
    c.mock_model = optional_path("mock.model");

    c.provider.endpoint = doc.get_or("provider.endpoint", c.provider.endpoint);
    c.provider.model = doc.get_or("provider.model", c.provider.model);
    c.provider.api_key_env = doc.get_or("provider.api_key_env", c.provider.api_key_env);
    if (doc.contains("provider.temperature")) c.provider.temperature = doc.get_double("provider.temperature", 0.0);
    c.batch.max_in_flight = static_cast<std::size_t>(doc.get_int("provider.max_in_flight", 4));
    c.batch.max_retries = static_cast<int>(doc.get_int("provider.max_retries", 3));
    c.batch.backoff = std::chrono::milliseconds(doc.get_int("provider.backoff_ms", 500));
    c.batch.requests_per_second = doc.get_double("provider.rate_per_second", 0.0);
    c.batch.burst = static_cast<std::size_t>(doc.get_int("provider.burst", 1));

    c.repetitions = static_cast<int>(doc.get_int("repetitions", 5));
    if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");

    c.filter.year_min = static_cast<int>(doc.get_int("filter.year_min", c.filter.year_min));
    c.filter.year_max = static_cast<int>(doc.get_int("filter.year_max", c.filter.year_max));
    if (doc.contains("filter.doc_types")) {
        auto v = doc.get_list("filter.doc_types");
        c.filter.allowed_doc_types = {v.begin(), v.end()};
    }
    if (doc.contains("filter.languages")) {
        auto v = doc.get_list("filter.languages");
        c.filter.allowed_languages = {v.begin(), v.end()};
    }
    c.filter.abstract_decile_cut = doc.get_double("filter.abstract_cut", c.filter.abstract_decile_cut);
    try {
        c.filter.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    c.bootstrap.resamples = static_cast<int>(doc.get_int("bootstrap.resamples", 1000));
    c.bootstrap.alpha = doc.get_double("bootstrap.alpha", 0.05);
    c.bootstrap.seed = static_cast<std::uint64_t>(doc.get_int("bootstrap.seed", 1));

    c.wata.alpha = doc.get_double("wata.alpha", 0.05);
    c.wata.min_docs = static_cast<std::size_t>(doc.get_int("wata.min_docs", 5));
    c.wata.yates = doc.get_int("wata.yates", 0) != 0;
    if (auto sw = optional_path("wata.stop_words")) {
        std::ifstream in(*sw);
        if (!in) throw ConfigError(fmt::format("cannot open stop-word list '{}'", sw->string()));
        for (std::string w; std::getline(in, w);) {
            auto t = trim_copy(w);
            if (!t.empty() && t.front() != '#') c.wata.stop_words.insert(t);
        }
    }
    c.wata_contexts = static_cast<std::size_t>(doc.get_int("wata.contexts", 10));
    c.audit_k = static_cast<std::size_t>(doc.get_int("audit.k", 50));
    return c;
}

ProjectLock::ProjectLock(const fs::path& output_dir) : path_(output_dir / ".natval.lock") {
    fs::create_directories(output_dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw Error(fmt::format("'{}' exists: another command is running in this project (remove the file if stale)",
                                path_.string()));
    const auto pid = std::to_string(::getpid());
    [[maybe_unused]] auto w = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

ProjectLock::~ProjectLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

void require_file(const fs::path& p, std::string_view what) {
    if (!fs::exists(p)) throw ConfigError(fmt::format("{} '{}' does not exist", what, p.string()));
}

std::string banner(const ProjectConfig& cfg, std::string_view stage, std::string_view seed, std::string_view templates) {
    return fmt::format("natval stage={} config={} seed={} templates={}", stage, cfg.config_hash, seed, templates);
}

/// Writes to a temporary file and renames, so readers never see partial outputs.
class OutputFile {
public:
    OutputFile(fs::path path, const std::string& banner_line, bool markdown = false)
        : path_(std::move(path)), tmp_(path_.string() + ".tmp"), out_(tmp_, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error(fmt::format("cannot write '{}'", tmp_.string()));
        if (markdown) out_ << "<!-- " << banner_line << " -->\n";
        else out_ << "# " << banner_line << '\n';
    }
    std::ostream& stream() { return out_; }
    fs::path commit() {
        out_.close();
        if (!out_) throw Error(fmt::format("failed writing '{}'", tmp_.string()));
        fs::rename(tmp_, path_);
        return path_;
    }

private:
    fs::path path_;
    fs::path tmp_;
    std::ofstream out_;
};

std::string template_set_hash(const ProjectConfig& cfg) {
    if (!fs::is_directory(cfg.templates)) return "none";
    return TemplateStore::load(cfg.templates).set_version();
}

std::vector<ClassifiedArticle> load_snapshot(const ProjectConfig& cfg) {
    const auto path = cfg.output / "snapshot.csv";
    if (!fs::exists(path)) throw Error(fmt::format("'{}' not found: run the ingest stage first", path.string()));
    std::ifstream in(path, std::ios::binary);
    return read_snapshot(in);
}

std::string join_ids(const std::vector<std::string>& ids) { return fmt::format("{}", fmt::join(ids, ", ")); }

}  // namespace

IngestReport cmd_ingest(const ProjectConfig& cfg) {
    require_file(cfg.corpus, "corpus");
    ProjectLock lock(cfg.output);
    const auto seed = std::to_string(cfg.bootstrap.seed);
    const auto templates = template_set_hash(cfg);

    IngestOptions opts;
    if (cfg.header_map) opts.headers = HeaderMap::load(*cfg.header_map);
    if (cfg.asjc_names) opts.asjc_names = load_asjc_names(*cfg.asjc_names);

    std::ifstream in(cfg.corpus, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open corpus '{}'", cfg.corpus.string()));
    auto parsed = parse_corpus_csv(in, opts);

    IngestReport report;
    report.data_rows = parsed.data_rows;
    report.parsed = parsed.articles.size();
    report.diagnostics = parsed.diagnostics.size();
    for (const auto& d : parsed.diagnostics)
        fmt::print(stderr, "{}:{}: {}{}\n", cfg.corpus.filename().string(), d.line, d.id.empty() ? "" : d.id + ": ", d.reason);
    {
        OutputFile f(cfg.output / "ingest_diagnostics.csv", banner(cfg, "ingest", seed, templates));
        write_diagnostics_csv(f.stream(), parsed.diagnostics);
        f.commit();
    }

    if (parsed.articles.empty()) throw Error("no usable articles in the corpus");
    auto filtered = filter_corpus(parsed.articles, cfg.filter);
    report.removed = filtered.removed;
    report.kept = filtered.kept.size();

    std::vector<PanelAssignment> assignments;
    assignments.reserve(filtered.kept.size());
    for (const auto& a : filtered.kept) assignments.push_back(assign_panel(a));
    const auto overrides = cfg.overrides ? load_overrides(*cfg.overrides) : std::map<std::string, Panel>{};

    std::vector<std::string> unresolved;
    {
        OutputFile f(cfg.output / "panel_assignments.csv", banner(cfg, "ingest", seed, templates));
        csv::write_row(f.stream(), {"id", "status", "candidates", "panel"});
        for (const auto& a : assignments) {
            std::vector<std::string> cands;
            for (auto p : a.candidates) cands.emplace_back(to_string(p));
            std::string status = a.status == AssignmentStatus::Resolved    ? "resolved"
                                 : a.status == AssignmentStatus::Ambiguous ? "ambiguous"
                                                                           : "unclassifiable";
            std::string panel;
            if (auto p = a.panel()) {
                panel = to_string(*p);
            } else {
                ++report.ambiguous;
                if (auto it = overrides.find(a.article_id); it != overrides.end()) {
                    panel = to_string(it->second);
                    status += "+override";
                    ++report.overridden;
                } else {
                    unresolved.push_back(a.article_id);
                }
            }
            csv::write_row(f.stream(), {a.article_id, status, fmt::format("{}", fmt::join(cands, ";")), panel});
        }
        f.commit();
    }

    {
        OutputFile f(cfg.output / "ingest_report.txt", banner(cfg, "ingest", seed, templates));
        auto& o = f.stream();
        o << fmt::format("data rows: {}\nparsed articles: {}\nrejected rows: {}\n", report.data_rows, report.parsed,
                         report.diagnostics);
        o << fmt::format("removed by year: {}\nremoved by document type: {}\nremoved by language: {}\n",
                         report.removed.year, report.removed.doc_type, report.removed.language);
        o << fmt::format("removed for empty abstract: {}\nremoved as shortest abstracts: {}\nkept: {}\n",
                         report.removed.empty_abstract, report.removed.short_abstract, report.kept);
        o << fmt::format("ambiguous or unclassifiable: {}\nresolved by override: {}\n{} unresolved\n", report.ambiguous,
                         report.overridden, unresolved.size());
        for (const auto& id : unresolved) o << "unresolved: " << id << '\n';
        f.commit();
    }

    if (!unresolved.empty()) {
        throw UnresolvedPanels(fmt::format("{} article(s) need a panel override (see panel_assignments.csv): {}",
                                           unresolved.size(), join_ids(unresolved)),
                               unresolved);
    }

    const auto panels = resolve_panels(assignments, overrides);
    std::vector<ClassifiedArticle> snapshot;
    snapshot.reserve(filtered.kept.size());
    for (auto& a : filtered.kept) {
        const auto panel = panels.at(a.id);
        snapshot.push_back({std::move(a), panel});
    }
    OutputFile f(cfg.output / "snapshot.csv", banner(cfg, "ingest", seed, templates));
    write_snapshot(f.stream(), snapshot);
    f.commit();
    return report;
}

ScoreReport cmd_score(const ProjectConfig& cfg, const ScoreOptions& opts) {
    if (opts.regimes.empty() || opts.variants.empty()) throw ConfigError("no regimes or variants selected");
    // Credentials are checked before any other work.
    std::unique_ptr<ScoringProvider> provider;
    if (opts.mock_seed) {
        auto model = cfg.mock_model ? MockScoreModel::load(*cfg.mock_model) : MockScoreModel::defaults();
        provider = std::make_unique<MockProvider>(*opts.mock_seed, std::move(model));
    } else {
        provider = std::make_unique<OpenAIChatProvider>(OpenAIChatProvider::from_environment(cfg.provider));
    }
    require_file(cfg.profile, "country profile");
    require_file(cfg.templates, "template directory");

    ProjectLock lock(cfg.output);
    const auto snapshot = load_snapshot(cfg);
    const auto profile = CountryProfile::load(cfg.profile);
    const auto store = TemplateStore::load(cfg.templates);
    const auto templates = store.set_version();
    const auto seed = opts.mock_seed ? std::to_string(*opts.mock_seed) : std::string("live");

    const auto marker = cfg.output / ".score_in_progress";
    if (fs::exists(marker) && !opts.resume)
        throw Error("a previous scoring run was interrupted; rerun with --resume to continue from the cache");
    { std::ofstream(marker) << provider->id() << '\n'; }

    std::map<std::tuple<Regime, Panel, Variant>, PromptSpec> prompts;
    std::vector<ScoreRequest> requests;
    std::map<std::string, Panel> panels;
    for (const auto& [article, panel] : snapshot) {
        panels[article.id] = panel;
        const auto user_text = build_user_prompt(article);
        for (auto regime : opts.regimes) {
            for (auto variant : opts.variants) {
                auto key = std::tuple{regime, panel, variant};
                auto it = prompts.find(key);
                if (it == prompts.end())
                    it = prompts.emplace(key, render_system_instructions(store, regime, panel, variant, profile)).first;
                for (int run = 1; run <= cfg.repetitions; ++run)
                    requests.push_back(make_request(article.id, it->second, user_text, run));
            }
        }
    }

    ResponseCache cache(cfg.output / "cache" / provider->id());
    fmt::print(stderr, "scoring {} articles: {} requests via {}\n", snapshot.size(), requests.size(), provider->id());
    const auto batch = execute_batch(requests, *provider, cfg.batch, cache);

    ScoreReport report;
    report.articles = snapshot.size();
    report.requests = requests.size();
    report.telemetry = batch.telemetry;
    report.provider_id = provider->id();

    std::vector<ScoreSample> samples;
    std::vector<FailureRecord> failures;
    samples.reserve(batch.outcomes.size());
    for (const auto& o : batch.outcomes) {
        if (!o.ok()) failures.push_back(std::get<FailureRecord>(o.result));
        samples.push_back(to_sample(o));
        if (o.ok() && !samples.back().usable()) ++report.parse_failures;
    }
    report.failures = failures.size();

    const auto matrix = build_score_matrix(aggregate(samples, cfg.repetitions), panels);
    const auto head = banner(cfg, "score", seed, templates);
    {
        OutputFile f(cfg.output / "score_samples.csv", head);
        write_samples_csv(f.stream(), samples);
        f.commit();
    }
    {
        OutputFile f(cfg.output / "failures.csv", head);
        write_failures_csv(f.stream(), failures);
        f.commit();
    }
    {
        OutputFile f(cfg.output / "templates.csv", head);
        csv::write_row(f.stream(), {"regime", "panel", "variant", "template_version"});
        for (const auto& [key, spec] : prompts) {
            csv::write_row(f.stream(), {std::string(to_string(spec.regime)), std::string(to_string(spec.panel)),
                                        std::string(to_string(spec.variant)), spec.template_version});
        }
        f.commit();
    }
    {
        OutputFile f(cfg.output / "score_matrix.csv", head);
        write_score_matrix(f.stream(), matrix);
        f.commit();
    }
    fs::remove(marker);
    fmt::print(stderr, "provider calls {}, cache hits {}, retries {}, failures {}, unparseable {}\n",
               report.telemetry.provider_calls, report.telemetry.cache_hits, report.telemetry.retries, report.failures,
               report.parse_failures);
    return report;
}

AnalyzeReport cmd_analyze(const ProjectConfig& cfg) {
    require_file(cfg.profile, "country profile");
    ProjectLock lock(cfg.output);
    const auto snapshot = load_snapshot(cfg);
    const auto matrix_path = cfg.output / "score_matrix.csv";
    if (!fs::exists(matrix_path))
        throw Error(fmt::format("'{}' not found: run the score stage first", matrix_path.string()));
    std::vector<ScoreMatrixRow> matrix;
    {
        std::ifstream in(matrix_path, std::ios::binary);
        matrix = read_score_matrix(in);
    }
    const auto profile = CountryProfile::load(cfg.profile);
    const auto head = banner(cfg, "analyze", std::to_string(cfg.bootstrap.seed), template_set_hash(cfg));

    AnalyzeReport report;
    auto emit = [&](const std::string& name, auto&& writer, bool markdown = false) {
        OutputFile f(cfg.output / name, head, markdown);
        writer(f.stream());
        report.outputs.push_back(f.commit());
    };

    std::map<std::string, const Article*> by_id;
    std::vector<CitationInput> cites;
    for (const auto& [a, panel] : snapshot) {
        by_id[a.id] = &a;
        cites.push_back({a.id, panel, a.year, a.citations});
    }
    const auto nlcs = compute_nlcs(cites);
    std::map<std::string, double> nlcs_by_id;
    for (const auto& r : nlcs) nlcs_by_id[r.article_id] = r.nlcs;
    emit("nlcs.csv", [&](std::ostream& o) { write_nlcs_csv(o, nlcs); });

    const auto families = analysis::collect_families(matrix, nlcs_by_id);
    const auto correlations = analysis::correlation_matrix(families, cfg.bootstrap);
    for (const auto& c : correlations) (c.result ? report.correlations : report.skipped_correlations)++;
    emit("correlations.csv", [&](std::ostream& o) { analysis::write_correlations_csv(o, correlations); });

    const auto diffs = analysis::indicator_difference(matrix);
    emit("indicator_diff.csv", [&](std::ostream& o) { analysis::write_diffs_csv(o, diffs.diffs); });

    const auto audits = analysis::audit_mentions(diffs.diffs, by_id, profile, cfg.audit_k);
    emit("mention_audit.csv", [&](std::ostream& o) { analysis::write_audit_csv(o, audits); });

    std::map<Panel, double> rates;
    for (auto p : kAllPanels) {
        std::vector<Article> in_panel;
        for (const auto& [a, panel] : snapshot) {
            if (panel == p) in_panel.push_back(a);
        }
        if (!in_panel.empty()) rates[p] = analysis::mention_rate(in_panel, profile);
    }

    // Word association: the high group is the upper half on quality - value, then on value - quality.
    std::vector<wata::Document> docs;
    std::vector<double> diff_values;
    for (const auto& d : diffs.diffs) {
        const auto* a = by_id.at(d.article_id);
        docs.push_back({a->id, a->title + ". " + a->abstract});
        diff_values.push_back(d.diff);
    }
    std::vector<analysis::WataDirection> wata_results;
    std::vector<std::vector<std::string>> context_rows;
    for (const auto& [direction, sign] : {std::pair{"quality_over_value", 1.0}, std::pair{"value_over_quality", -1.0}}) {
        analysis::WataDirection w;
        w.direction = direction;
        std::vector<double> scores;
        for (double v : diff_values) scores.push_back(sign * v);
        try {
            if (scores.empty()) throw Error("no articles with complete Quality and ValueCountry scores");
            const auto split = wata::split_by_median(scores);
            std::vector<wata::TermSet> high, low;
            std::vector<wata::Document> high_docs;
            for (auto i : split.high) {
                high.push_back(wata::tokenize(docs[i].text));
                high_docs.push_back(docs[i]);
            }
            for (auto i : split.low) low.push_back(wata::tokenize(docs[i].text));
            if (high.empty() || low.empty()) throw Error("median split left an empty group");
            w.terms = wata::enriched_terms(high, low, cfg.wata);
            for (const auto& t : w.terms) {
                if (!t.selected) continue;
                for (const auto& s : wata::sample_contexts(t.term, high_docs, cfg.wata_contexts, cfg.bootstrap.seed))
                    context_rows.push_back({direction, t.term, s.article_id, s.sentence});
            }
        } catch (const Error& e) {
            w.note = fmt::format("Not computed: {}.", e.what());
        }
        wata_results.push_back(std::move(w));
    }
    emit("wata_terms.csv", [&](std::ostream& o) {
        bool header = true;
        for (const auto& w : wata_results) {
            wata::write_terms_csv(o, w.terms, w.direction, header);
            header = false;
        }
        if (header) wata::write_terms_csv(o, {}, "", true);
    });
    emit("wata_contexts.csv", [&](std::ostream& o) {
        csv::write_row(o, {"direction", "term", "article_id", "sentence"});
        for (const auto& r : context_rows) csv::write_row(o, r);
    });

    analysis::SummaryInput summary;
    summary.country = profile.name;
    summary.matrix = &matrix;
    summary.mention_rates = rates;
    summary.correlations = &correlations;
    summary.audits = &audits;
    summary.wata = &wata_results;
    summary.diff_excluded = diffs.excluded;
    emit("summary.md", [&](std::ostream& o) { analysis::write_summary_markdown(o, summary); }, true);
    return report;
}

}  // namespace natval
