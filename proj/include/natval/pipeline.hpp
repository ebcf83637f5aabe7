#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "natval/corpus.hpp"
#include "natval/gateway.hpp"
#include "natval/openai_provider.hpp"
#include "natval/promptkit.hpp"
#include "natval/stats.hpp"
#include "natval/wata.hpp"

namespace natval {

/// Project configuration, a key-value file. Relative paths resolve against the
/// directory holding the config file.
///
///     corpus = data/scopus.csv
///     profile = profiles/mauritius.conf
///     templates = templates
///     output = out
///     overrides = overrides.csv            # optional
///     header_map = headers.conf            # optional
///     asjc_names = asjc_names.csv          # optional
///     mock.model = mock_model.conf         # optional
///     repetitions = 5
///     provider.endpoint / provider.model / provider.api_key_env / provider.temperature
///     provider.max_in_flight / provider.max_retries / provider.backoff_ms / provider.rate_per_second
///     filter.year_min / filter.year_max / filter.doc_types / filter.languages / filter.abstract_cut
///     bootstrap.resamples / bootstrap.alpha / bootstrap.seed
///     wata.alpha / wata.min_docs / wata.contexts / wata.stop_words (file, one word per line)
///     audit.k = 50
struct ProjectConfig {
    std::filesystem::path config_path;
    /// Short hash of the config file bytes.
    std::string config_hash;

    std::filesystem::path corpus;
    std::filesystem::path profile;
    std::filesystem::path templates;
    std::filesystem::path output;
    std::optional<std::filesystem::path> overrides;
    std::optional<std::filesystem::path> header_map;
    std::optional<std::filesystem::path> asjc_names;
    std::optional<std::filesystem::path> mock_model;

    ProviderSettings provider;
    BatchPolicy batch;
    int repetitions = 5;
    FilterConfig filter;
    stats::BootstrapConfig bootstrap;
    wata::EnrichmentConfig wata;
    std::size_t wata_contexts = 10;
    std::size_t audit_k = 50;

    static ProjectConfig load(const std::filesystem::path& path);
};

/// Exclusive per-project lock file held for the lifetime of a command.
class ProjectLock {
public:
    explicit ProjectLock(const std::filesystem::path& output_dir);
    ~ProjectLock();
    ProjectLock(const ProjectLock&) = delete;
    ProjectLock& operator=(const ProjectLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Ambiguous or unclassifiable articles lacking an override.
class UnresolvedPanels : public Error {
public:
    UnresolvedPanels(const std::string& what, std::vector<std::string> ids) : Error(what), ids_(std::move(ids)) {}
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
};

struct IngestReport {
    std::size_t data_rows = 0;
    std::size_t parsed = 0;
    std::size_t diagnostics = 0;
    RemovalCounts removed;
    std::size_t kept = 0;
    std::size_t ambiguous = 0;
    std::size_t overridden = 0;
};

/// Parses, filters and classifies the corpus; writes snapshot.csv, panel_assignments.csv,
/// ingest_diagnostics.csv and ingest_report.txt. Throws UnresolvedPanels (after writing
/// panel_assignments.csv) when overrides are missing.
IngestReport cmd_ingest(const ProjectConfig& cfg);

struct ScoreOptions {
    std::set<Regime> regimes{kAllRegimes.begin(), kAllRegimes.end()};
    std::set<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
    std::optional<std::uint64_t> mock_seed;
    /// Required to continue after an interrupted scoring run.
    bool resume = false;
};

struct ScoreReport {
    std::size_t articles = 0;
    std::size_t requests = 0;
    BatchTelemetry telemetry;
    std::size_t failures = 0;
    std::size_t parse_failures = 0;
    std::string provider_id;
};

/// Builds every (article x regime x variant x run) request, runs the gateway and
/// writes score_matrix.csv, score_samples.csv, failures.csv and templates.csv.
ScoreReport cmd_score(const ProjectConfig& cfg, const ScoreOptions& opts);

struct AnalyzeReport {
    std::vector<std::filesystem::path> outputs;
    std::size_t correlations = 0;
    std::size_t skipped_correlations = 0;
};

/// NLCS, correlation table, indicator differences, mention audit, WATA worksheets and
/// summary.md from the snapshot and score matrix.
AnalyzeReport cmd_analyze(const ProjectConfig& cfg);

}  // namespace natval
