#pragma once

// SPARQL endpoint adapter for the Store interface. Queries target a flat
// graph shape (one resource per record, literal-valued predicates under the
// urn:bm: namespace, normalized forms precomputed in the rendering):
//
//   <base><meta_id>  bm:doi          "10.1234/example.42"   (normalized)
//                    bm:title        "An Example Title"
//                    bm:normTitle    "an example title"
//                    bm:surname      "Meyer"
//                    bm:normSurname  "meyer"
//                    bm:year         2021
//                    bm:volume       "2"
//                    bm:startPage    "20"
//                    bm:endPage      "41"
//
// Mandatory tier fields become literal triple patterns (years as a VALUES set
// covering the +/-1 tolerance); all metadata comes back through OPTIONAL
// patterns so non-DOI queries still return DOIs for scoring. Results are
// consumed in the standard SPARQL JSON results format.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibmatch/http.hpp"
#include "bibmatch/model.hpp"
#include "bibmatch/netguard.hpp"
#include "bibmatch/store.hpp"

namespace bibmatch {

/// Escapes a string for use inside a double-quoted SPARQL literal.
inline std::string sparql_escape(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

namespace sparql_detail {

inline const char* predicate_for(Field f) {
    switch (f) {
        case Field::Doi: return "bm:doi";
        case Field::ArticleTitle: return "bm:normTitle";
        case Field::AuthorSurname: return "bm:normSurname";
        case Field::Volume: return "bm:volume";
        case Field::FirstPage: return "bm:startPage";
        default: return nullptr;
    }
}

inline std::string literal_for(const Reference& probe, Field f) {
    switch (f) {
        case Field::Doi: return normalize_doi(probe.doi);
        case Field::ArticleTitle: return normalize_title(probe.article_title);
        case Field::AuthorSurname: return normalize_name(probe.first_author_surname);
        case Field::Volume: return trim(probe.volume);
        case Field::FirstPage: return trim(probe.first_page);
        default: return {};
    }
}

} // namespace sparql_detail

/// Query text for one tier. `ignore_year` (the year-cleared retry) drops the
/// year constraint from year-mandatory tiers.
inline std::string build_tier_query(const Reference& probe, QueryTier tier, int limit,
                                    bool ignore_year = false) {
    std::string q = "PREFIX bm: <urn:bm:>\n"
                    "SELECT ?res ?doi ?title ?surname ?year ?volume ?startPage ?endPage\n"
                    "WHERE {\n";
    for (Field f : tier_mandatory_fields(tier)) {
        if (f == Field::Year) {
            if (ignore_year || !probe.year) continue;
            int y = *probe.year;
            q += "  VALUES ?y { " + std::to_string(y - 1) + " " + std::to_string(y) + " " +
                 std::to_string(y + 1) + " }\n";
            q += "  ?res bm:year ?y .\n";
            continue;
        }
        const char* predicate = sparql_detail::predicate_for(f);
        q += std::string("  ?res ") + predicate + " \"" +
             sparql_escape(sparql_detail::literal_for(probe, f)) + "\" .\n";
    }
    q += "  OPTIONAL { ?res bm:doi ?doi . }\n"
         "  OPTIONAL { ?res bm:title ?title . }\n"
         "  OPTIONAL { ?res bm:surname ?surname . }\n"
         "  OPTIONAL { ?res bm:year ?year . }\n"
         "  OPTIONAL { ?res bm:volume ?volume . }\n"
         "  OPTIONAL { ?res bm:startPage ?startPage . }\n"
         "  OPTIONAL { ?res bm:endPage ?endPage . }\n"
         "}\n"
         "ORDER BY ?res\n"
         "LIMIT " + std::to_string(limit) + "\n";
    return q;
}

inline std::string build_doi_query(const std::string& doi) {
    return "PREFIX bm: <urn:bm:>\n"
           "SELECT ?res ?doi ?title ?surname ?year ?volume ?startPage ?endPage\n"
           "WHERE {\n"
           "  ?res bm:doi \"" + sparql_escape(normalize_doi(doi)) + "\" .\n"
           "  OPTIONAL { ?res bm:doi ?doi . }\n"
           "  OPTIONAL { ?res bm:title ?title . }\n"
           "  OPTIONAL { ?res bm:surname ?surname . }\n"
           "  OPTIONAL { ?res bm:year ?year . }\n"
           "  OPTIONAL { ?res bm:volume ?volume . }\n"
           "  OPTIONAL { ?res bm:startPage ?startPage . }\n"
           "  OPTIONAL { ?res bm:endPage ?endPage . }\n"
           "}\n"
           "ORDER BY ?res\n"
           "LIMIT 1\n";
}

struct SparqlStoreConfig {
    std::string endpoint_url = "https://w3id.org/oc/meta/sparql";
    /// Resource IRI prefix stripped off `?res` to produce meta ids.
    std::string resource_base = "urn:bm:res:";
};

class SparqlStore : public Store {
public:
    SparqlStore(SparqlStoreConfig cfg, HttpGuard& guard)
        : cfg_(std::move(cfg)), url_(split_url(cfg_.endpoint_url)), guard_(guard) {}

    StoreQueryResult retrieve_candidates(const Reference& probe, QueryTier tier, int limit,
                                         bool ignore_year = false) override {
        for (Field f : tier_mandatory_fields(tier)) {
            if (ignore_year && f == Field::Year) continue;
            if (!probe.has(f))
                throw std::invalid_argument(std::string("retrieve_candidates: mandatory field `") +
                                            field_name(f) + "` is empty for tier " +
                                            tier_label(tier));
        }
        StoreQueryResult result;
        result.tier = tier;
        result.candidates = run_query(build_tier_query(probe, tier, limit, ignore_year));
        std::sort(result.candidates.begin(), result.candidates.end(),
                  [](const Candidate& a, const Candidate& b) { return a.meta_id < b.meta_id; });
        if (static_cast<int>(result.candidates.size()) > limit)
            result.candidates.resize(static_cast<size_t>(limit));
        return result;
    }

    std::optional<Candidate> doi_exists(const std::string& doi) override {
        std::vector<Candidate> found = run_query(build_doi_query(doi));
        if (found.empty()) return std::nullopt;
        return found.front();
    }

private:
    std::vector<Candidate> run_query(const std::string& query) {
        httplib::Params params{{"query", query}};
        httplib::Headers headers{{"Accept", "application/sparql-results+json"}};
        HttpResponse resp = guard_.execute([&] {
            return http_post_form(url_.origin, url_.path.empty() ? "/" : url_.path, params,
                                  headers);
        });
        return parse_results(resp.body);
    }

    std::vector<Candidate> parse_results(const std::string& body) const {
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("sparql results: ") + e.what());
        }
        std::vector<Candidate> out;
        if (!root.contains("results") || !root["results"].contains("bindings"))
            throw ParseError("sparql results: missing results.bindings");
        for (const auto& binding : root["results"]["bindings"]) {
            auto value = [&](const char* var) -> std::string {
                if (!binding.contains(var)) return {};
                const auto& b = binding[var];
                if (!b.contains("value") || !b["value"].is_string()) return {};
                return b["value"].get<std::string>();
            };
            Candidate cand;
            std::string res = value("res");
            cand.meta_id = res.rfind(cfg_.resource_base, 0) == 0
                               ? res.substr(cfg_.resource_base.size())
                               : res;
            std::string doi = value("doi");
            if (!doi.empty()) cand.doi = normalize_doi(doi);
            cand.title = value("title");
            cand.first_author_surname = value("surname");
            std::string year = value("year");
            if (!year.empty()) cand.year = parse_year_field(year);
            cand.volume = value("volume");
            cand.first_page = value("startPage");
            cand.last_page = value("endPage");
            if (!cand.meta_id.empty()) out.push_back(std::move(cand));
        }
        return out;
    }

    SparqlStoreConfig cfg_;
    UrlParts url_;
    HttpGuard& guard_;
};

} // namespace bibmatch
