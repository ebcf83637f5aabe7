#include "natval/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "natval/csv.hpp"
#include "natval/error.hpp"
#include "natval/keyvalue.hpp"

namespace natval {

std::string_view to_string(Panel p) {
    switch (p) {
        case Panel::A: return "A";
        case Panel::B: return "B";
        case Panel::C: return "C";
        case Panel::D: return "D";
    }
    return "?";
}

Panel panel_from_string(std::string_view s) {
    const auto t = trim_copy(s);
    if (t.size() == 1) {
        switch (t[0]) {
            case 'A': case 'a': return Panel::A;
            case 'B': case 'b': return Panel::B;
            case 'C': case 'c': return Panel::C;
            case 'D': case 'd': return Panel::D;
            default: break;
        }
    }
    throw Error(fmt::format("'{}' is not a panel (expected A, B, C or D)", t));
}

HeaderMap HeaderMap::load(const std::filesystem::path& path) {
    const auto doc = KeyValueDoc::load(path);
    HeaderMap m;
    const std::pair<const char*, std::string*> keys[] = {
        {"eid", &m.eid},           {"doi", &m.doi},
        {"title", &m.title},       {"abstract", &m.abstract},
        {"year", &m.year},         {"cited_by", &m.cited_by},
        {"language", &m.language}, {"doc_type", &m.doc_type},
        {"source_title", &m.source_title}, {"asjc", &m.asjc},
    };
    for (const auto& [key, target] : keys) {
        if (auto v = doc.get(key)) *target = *v;
    }
    return m;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    const auto t = trim_copy(s);
    Int v{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

}  // namespace

std::map<std::string, int> load_asjc_names(const std::filesystem::path& path) {
    const auto table = csv::read_file(path.string());
    std::map<std::string, int> out;
    for (const auto& row : table.rows) {
        if (row.fields.size() < 2) throw Error(fmt::format("{}:{}: expected (name, code)", path.string(), row.line));
        auto code = parse_int<int>(row.fields[1]);
        if (!code) throw Error(fmt::format("{}:{}: bad ASJC code '{}'", path.string(), row.line, row.fields[1]));
        out[lower(trim_copy(row.fields[0]))] = *code;
    }
    return out;
}

ParsedCorpus parse_corpus_csv(std::istream& in, const IngestOptions& opts) {
    const auto table = csv::read(in);
    const auto& h = opts.headers;

    auto required = [&](const std::string& name) {
        auto idx = table.column(name);
        if (!idx) throw Error(fmt::format("missing mandatory header \"{}\"", name));
        return *idx;
    };
    const auto eid_col = table.column(h.eid);
    const auto doi_col = table.column(h.doi);
    if (!eid_col && !doi_col) throw Error(fmt::format("missing mandatory header \"{}\"", h.eid));
    const auto title_col = required(h.title);
    const auto abstract_col = required(h.abstract);
    const auto year_col = required(h.year);
    const auto cited_col = required(h.cited_by);
    const auto asjc_col = required(h.asjc);
    const auto lang_col = table.column(h.language);
    const auto type_col = table.column(h.doc_type);
    const auto source_col = table.column(h.source_title);

    ParsedCorpus out;
    out.data_rows = table.rows.size();
    std::set<std::string> seen;

    for (const auto& row : table.rows) {
        auto cell = [&](std::optional<std::size_t> col) -> std::string {
            if (!col || *col >= row.fields.size()) return {};
            return trim_copy(row.fields[*col]);
        };
        auto reject = [&](std::string id, std::string reason) {
            out.diagnostics.push_back(RowDiagnostic{row.line, std::move(id), std::move(reason)});
        };

        Article a;
        a.id = cell(eid_col);
        if (a.id.empty()) a.id = cell(doi_col);
        if (row.fields.size() != table.header.size()) {
            reject(a.id, fmt::format("expected {} fields, found {}", table.header.size(), row.fields.size()));
            continue;
        }
        if (a.id.empty()) {
            reject("", "no EID or DOI");
            continue;
        }
        if (!seen.insert(a.id).second) {
            reject(a.id, "duplicate id");
            continue;
        }
        a.title = cell(title_col);
        a.abstract = cell(abstract_col);
        a.language = cell(lang_col);
        a.doc_type = cell(type_col);
        a.source_title = cell(source_col);

        const auto year = parse_int<int>(cell(year_col));
        if (!year) {
            reject(a.id, fmt::format("unparseable year '{}'", cell(year_col)));
            continue;
        }
        a.year = *year;

        const auto cited = cell(cited_col);
        if (cited.empty()) {
            a.citations = 0;
        } else if (auto c = parse_int<std::int64_t>(cited); c && *c >= 0) {
            a.citations = *c;
        } else {
            reject(a.id, fmt::format("unparseable citation count '{}'", cited));
            continue;
        }

        std::string bad_code;
        for (const auto& item : split_trimmed(cell(asjc_col), ';')) {
            if (auto code = parse_int<int>(item); code && *code >= 1000 && *code <= 9999) {
                a.asjc_codes.insert(*code);
            } else if (auto it = opts.asjc_names.find(lower(item)); it != opts.asjc_names.end()) {
                a.asjc_codes.insert(it->second);
            } else {
                bad_code = item;
                break;
            }
        }
        if (!bad_code.empty()) {
            reject(a.id, fmt::format("unknown ASJC entry '{}'", bad_code));
            continue;
        }
        if (a.asjc_codes.empty()) {
            reject(a.id, "no ASJC codes");
            continue;
        }
        out.articles.push_back(std::move(a));
    }
    return out;
}

void FilterConfig::validate() const {
    if (year_min > year_max) throw Error(fmt::format("year_min {} exceeds year_max {}", year_min, year_max));
    if (!(abstract_decile_cut >= 0.0 && abstract_decile_cut < 1.0))
        throw Error(fmt::format("abstract cut {} outside [0, 1)", abstract_decile_cut));
}

std::size_t abstract_length(std::string_view abstract) {
    std::size_t n = 0;
    bool pending_space = false;
    for (unsigned char c : abstract) {
        if (std::isspace(c)) {
            pending_space = n > 0;
            continue;
        }
        if ((c & 0xC0) == 0x80) continue;  // UTF-8 continuation byte
        if (pending_space) {
            ++n;
            pending_space = false;
        }
        ++n;
    }
    return n;
}

FilterResult filter_corpus(const std::vector<Article>& articles, const FilterConfig& cfg) {
    cfg.validate();
    if (articles.empty()) throw Error("cannot filter an empty corpus");

    FilterResult res;
    std::vector<const Article*> survivors;
    for (const auto& a : articles) {
        if (a.year < cfg.year_min || a.year > cfg.year_max) {
            ++res.removed.year;
        } else if (!cfg.allowed_doc_types.empty() && !cfg.allowed_doc_types.contains(a.doc_type)) {
            ++res.removed.doc_type;
        } else if (!cfg.allowed_languages.empty() && !cfg.allowed_languages.contains(a.language)) {
            ++res.removed.language;
        } else if (abstract_length(a.abstract) == 0) {
            ++res.removed.empty_abstract;
        } else {
            survivors.push_back(&a);
        }
    }

    // Small epsilon so that e.g. 0.29 * 100 floors to 29, not 28.
    const auto cut = static_cast<std::size_t>(std::floor(cfg.abstract_decile_cut * survivors.size() + 1e-9));
    std::vector<std::size_t> order(survivors.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> lengths(survivors.size());
    for (std::size_t i = 0; i < survivors.size(); ++i) lengths[i] = abstract_length(survivors[i]->abstract);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (lengths[l] != lengths[r]) return lengths[l] < lengths[r];
        return survivors[l]->id < survivors[r]->id;
    });
    std::vector<bool> drop(survivors.size(), false);
    for (std::size_t i = 0; i < cut; ++i) drop[order[i]] = true;
    res.removed.short_abstract = cut;

    for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (!drop[i]) res.kept.push_back(*survivors[i]);
    }
    if (res.kept.empty()) throw Error("empty corpus: every article was removed by the filters");
    return res;
}

std::optional<Panel> panel_for_prefix(int prefix) {
    switch (prefix) {
        case 11: case 13: case 24: case 27: case 28: case 29: case 30: case 32: case 34: case 35: case 36:
            return Panel::A;
        case 15: case 16: case 17: case 18: case 19: case 21: case 22: case 23: case 25: case 26: case 31:
            return Panel::B;
        case 14: case 20: case 33:
            return Panel::C;
        case 12:
            return Panel::D;
        default:
            return std::nullopt;
    }
}

PanelAssignment assign_panel(const Article& article) {
    if (article.asjc_codes.empty()) throw Error(fmt::format("article '{}' has no ASJC codes", article.id));
    PanelAssignment out;
    out.article_id = article.id;
    for (int code : article.asjc_codes) {
        if (auto p = panel_for_prefix(code / 100)) out.candidates.insert(*p);
    }
    if (out.candidates.size() == 1) out.status = AssignmentStatus::Resolved;
    else if (out.candidates.empty()) out.status = AssignmentStatus::Unclassifiable;
    else out.status = AssignmentStatus::Ambiguous;
    return out;
}

std::map<std::string, Panel> resolve_panels(const std::vector<PanelAssignment>& assignments,
                                            const std::map<std::string, Panel>& overrides) {
    std::map<std::string, Panel> out;
    std::vector<std::string> unresolved;
    for (const auto& a : assignments) {
        if (auto p = a.panel()) {
            out[a.article_id] = *p;
        } else if (auto it = overrides.find(a.article_id); it != overrides.end()) {
            out[a.article_id] = it->second;
        } else {
            unresolved.push_back(a.article_id);
        }
    }
    if (!unresolved.empty())
        throw Error(fmt::format("{} article(s) need a panel override: {}", unresolved.size(),
                                fmt::join(unresolved, ", ")));
    return out;
}

std::map<std::string, Panel> load_overrides(const std::filesystem::path& path) {
    const auto table = csv::read_file(path.string());
    const auto id_col = table.column("id");
    const auto panel_col = table.column("panel");
    if (!id_col || !panel_col) throw Error(fmt::format("{}: overrides need 'id' and 'panel' columns", path.string()));
    std::map<std::string, Panel> out;
    for (const auto& row : table.rows) {
        if (row.fields.size() <= std::max(*id_col, *panel_col))
            throw Error(fmt::format("{}:{}: short row", path.string(), row.line));
        try {
            out[trim_copy(row.fields[*id_col])] = panel_from_string(row.fields[*panel_col]);
        } catch (const Error& e) {
            throw Error(fmt::format("{}:{}: {}", path.string(), row.line, e.what()));
        }
    }
    return out;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<RowDiagnostic>& diags) {
    csv::write_row(out, {"line", "id", "reason"});
    for (const auto& d : diags) csv::write_row(out, {std::to_string(d.line), d.id, d.reason});
}

namespace {

const std::vector<std::string> kSnapshotHeader{"id",       "panel",    "year",         "citations", "asjc",
                                               "language", "doc_type", "source_title", "title",     "abstract"};

}  // namespace

void write_snapshot(std::ostream& out, const std::vector<ClassifiedArticle>& articles) {
    csv::write_row(out, kSnapshotHeader);
    for (const auto& [a, panel] : articles) {
        csv::write_row(out, {a.id, std::string(to_string(panel)), std::to_string(a.year), std::to_string(a.citations),
                             fmt::format("{}", fmt::join(a.asjc_codes, ";")), a.language, a.doc_type, a.source_title,
                             a.title, a.abstract});
    }
}

std::vector<ClassifiedArticle> read_snapshot(std::istream& in) {
    const auto table = csv::read(in);
    std::vector<std::size_t> cols;
    for (const auto& name : kSnapshotHeader) {
        auto c = table.column(name);
        if (!c) throw Error(fmt::format("snapshot lacks column '{}'", name));
        cols.push_back(*c);
    }
    std::vector<ClassifiedArticle> out;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size()) throw Error(fmt::format("snapshot line {}: wrong field count", row.line));
        auto f = [&](std::size_t i) { return row.fields[cols[i]]; };
        ClassifiedArticle ca;
        ca.article.id = f(0);
        ca.panel = panel_from_string(f(1));
        auto year = parse_int<int>(f(2));
        auto cites = parse_int<std::int64_t>(f(3));
        if (!year || !cites) throw Error(fmt::format("snapshot line {}: bad year or citations", row.line));
        ca.article.year = *year;
        ca.article.citations = *cites;
        for (const auto& code : split_trimmed(f(4), ';')) {
            if (auto c = parse_int<int>(code)) ca.article.asjc_codes.insert(*c);
        }
        ca.article.language = f(5);
        ca.article.doc_type = f(6);
        ca.article.source_title = f(7);
        ca.article.title = f(8);
        ca.article.abstract = f(9);
        out.push_back(std::move(ca));
    }
    return out;
}

}  // namespace natval
