#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "natval/error.hpp"

namespace natval {

/// Broad disciplinary grouping: A health/life sciences, B physical sciences/maths/engineering,
/// C social sciences, D arts/humanities.
enum class Panel { A, B, C, D };

inline constexpr std::array<Panel, 4> kAllPanels{Panel::A, Panel::B, Panel::C, Panel::D};

std::string_view to_string(Panel p);
/// Accepts "A".."D" (case-insensitive). Throws natval::Error otherwise.
Panel panel_from_string(std::string_view s);

struct Article {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 0;
    std::int64_t citations = 0;
    std::set<int> asjc_codes;
    std::string language;
    std::string doc_type;
    std::string source_title;
};

/// Article with its final panel, as stored in the corpus snapshot.
struct ClassifiedArticle {
    Article article;
    Panel panel = Panel::A;
};

struct RowDiagnostic {
    std::size_t line = 0;
    std::string id;
    std::string reason;
};

struct ParsedCorpus {
    std::vector<Article> articles;
    std::vector<RowDiagnostic> diagnostics;
    std::size_t data_rows = 0;
};

/// Logical field -> CSV header name. Defaults follow the Scopus export.
struct HeaderMap {
    std::string eid = "EID";
    std::string doi = "DOI";
    std::string title = "Title";
    std::string abstract = "Abstract";
    std::string year = "Year";
    std::string cited_by = "Cited by";
    std::string language = "Language of Original Document";
    std::string doc_type = "Document Type";
    std::string source_title = "Source title";
    std::string asjc = "ASJC";

    /// Key-value file with keys eid, doi, title, abstract, year, cited_by, language, doc_type,
    /// source_title, asjc. Unlisted keys keep their defaults.
    static HeaderMap load(const std::filesystem::path& path);
};

struct IngestOptions {
    HeaderMap headers;
    /// Lowercased subject-area name -> 4-digit ASJC code, for exports that carry names.
    std::map<std::string, int> asjc_names;
};

/// CSV of (name, code) rows.
std::map<std::string, int> load_asjc_names(const std::filesystem::path& path);

/// Missing mandatory header is a hard error; bad rows become diagnostics.
ParsedCorpus parse_corpus_csv(std::istream& in, const IngestOptions& opts = {});

struct FilterConfig {
    int year_min = 2015;
    int year_max = 2021;
    /// Empty set disables the rule.
    std::set<std::string> allowed_doc_types{"Article"};
    std::set<std::string> allowed_languages{"English"};
    double abstract_decile_cut = 0.10;

    void validate() const;
};

struct RemovalCounts {
    std::size_t year = 0;
    std::size_t doc_type = 0;
    std::size_t language = 0;
    std::size_t empty_abstract = 0;
    std::size_t short_abstract = 0;

    std::size_t total() const { return year + doc_type + language + empty_abstract + short_abstract; }
};

struct FilterResult {
    std::vector<Article> kept;
    RemovalCounts removed;
};

/// Code points after trimming and collapsing whitespace runs to one space.
std::size_t abstract_length(std::string_view abstract);

/// Year, document type, language and empty-abstract rules first; the shortest
/// floor(cut * n) survivors are then removed (stable order by length, then id).
/// Throws natval::Error when the input is empty or nothing survives.
FilterResult filter_corpus(const std::vector<Article>& articles, const FilterConfig& cfg);

enum class AssignmentStatus { Resolved, Ambiguous, Unclassifiable };

struct PanelAssignment {
    std::string article_id;
    AssignmentStatus status = AssignmentStatus::Unclassifiable;
    std::set<Panel> candidates;

    std::optional<Panel> panel() const {
        if (status == AssignmentStatus::Resolved) return *candidates.begin();
        return std::nullopt;
    }
};

/// Panel for a two-digit ASJC prefix; nullopt for Multidisciplinary (10) and unknown prefixes.
std::optional<Panel> panel_for_prefix(int prefix);

PanelAssignment assign_panel(const Article& article);

/// Throws natval::Error listing every unresolved id when an override is missing.
std::map<std::string, Panel> resolve_panels(const std::vector<PanelAssignment>& assignments,
                                            const std::map<std::string, Panel>& overrides);

/// CSV with columns (id, panel).
std::map<std::string, Panel> load_overrides(const std::filesystem::path& path);

void write_diagnostics_csv(std::ostream& out, const std::vector<RowDiagnostic>& diags);

void write_snapshot(std::ostream& out, const std::vector<ClassifiedArticle>& articles);
std::vector<ClassifiedArticle> read_snapshot(std::istream& in);

}  // namespace natval
