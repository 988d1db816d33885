#pragma once

// Knowledge-base abstraction: candidate retrieval per query tier and DOI
// existence checks. Two backends share this interface: the in-memory fixture
// store below and the SPARQL endpoint adapter in sparql_store.hpp.

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bibmatch/csv.hpp"
#include "bibmatch/errors.hpp"
#include "bibmatch/model.hpp"

namespace bibmatch {

/// The six rungs of the cascading match strategy, in execution order.
enum class QueryTier {
    Q1YearDoi = 0,
    Q2DoiTitle,
    Q3AuthTitle,
    Q4YearAuthPage,
    Q5YearVolPage,
    Q6YearAuthVol,
};

inline constexpr std::array<QueryTier, 6> kTierOrder = {
    QueryTier::Q1YearDoi,      QueryTier::Q2DoiTitle,    QueryTier::Q3AuthTitle,
    QueryTier::Q4YearAuthPage, QueryTier::Q5YearVolPage, QueryTier::Q6YearAuthVol,
};

inline const char* tier_label(QueryTier tier) {
    switch (tier) {
        case QueryTier::Q1YearDoi: return "Q1-YEAR&DOI";
        case QueryTier::Q2DoiTitle: return "Q2-DOI&TITLE";
        case QueryTier::Q3AuthTitle: return "Q3-AUTH&TITLE";
        case QueryTier::Q4YearAuthPage: return "Q4-YEAR&AUTH&PAGE";
        case QueryTier::Q5YearVolPage: return "Q5-YEAR&VOL&PAGE";
        case QueryTier::Q6YearAuthVol: return "Q6-YEAR&AUTH&VOL";
    }
    return "?";
}

inline std::optional<QueryTier> tier_from_label(std::string_view label) {
    for (QueryTier tier : kTierOrder)
        if (label == tier_label(tier)) return tier;
    return std::nullopt;
}

inline std::vector<Field> tier_mandatory_fields(QueryTier tier) {
    switch (tier) {
        case QueryTier::Q1YearDoi: return {Field::Year, Field::Doi};
        case QueryTier::Q2DoiTitle: return {Field::Doi, Field::ArticleTitle};
        case QueryTier::Q3AuthTitle: return {Field::AuthorSurname, Field::ArticleTitle};
        case QueryTier::Q4YearAuthPage:
            return {Field::Year, Field::AuthorSurname, Field::FirstPage};
        case QueryTier::Q5YearVolPage: return {Field::Year, Field::Volume, Field::FirstPage};
        case QueryTier::Q6YearAuthVol:
            return {Field::Year, Field::AuthorSurname, Field::Volume};
    }
    return {};
}

inline bool tier_uses_doi(QueryTier tier) {
    return tier == QueryTier::Q1YearDoi || tier == QueryTier::Q2DoiTitle;
}

/// True when every mandatory field of the tier is populated on `ref`.
/// With `ignore_year` (the year-cleared retry) the year requirement is
/// dropped instead of failing the tier.
inline bool tier_applicable(const Reference& ref, QueryTier tier, bool ignore_year = false) {
    for (Field f : tier_mandatory_fields(tier)) {
        if (ignore_year && f == Field::Year) continue;
        if (!ref.has(f)) return false;
    }
    return true;
}

struct StoreQueryResult {
    QueryTier tier;
    std::vector<Candidate> candidates; // sorted by meta_id, at most `limit`
};

class Store {
public:
    virtual ~Store() = default;

    /// Candidates whose stored values equal the probe's mandatory fields for
    /// the tier (years within +/-1; titles compared in normalized form).
    /// Every candidate carries all metadata the store holds for it, DOI
    /// included, even when the tier does not filter on DOI. `ignore_year`
    /// drops the year constraint for the year-cleared retry.
    virtual StoreQueryResult retrieve_candidates(const Reference& probe, QueryTier tier,
                                                 int limit, bool ignore_year = false) = 0;

    /// The store's record for a normalized DOI, or absent.
    virtual std::optional<Candidate> doi_exists(const std::string& doi) = 0;
};

/// In-memory backend. Immutable once loaded; safe for concurrent reads.
class FixtureStore : public Store {
public:
    void add(Candidate cand) {
        size_t id = records_.size();
        if (field_present(cand.doi)) {
            cand.doi = normalize_doi(cand.doi);
            doi_index_[cand.doi].push_back(id);
        }
        if (field_present(cand.first_author_surname))
            surname_index_[normalize_name(cand.first_author_surname)].push_back(id);
        if (field_present(cand.volume) && field_present(cand.first_page))
            vol_page_index_[trim(cand.volume) + '\x1f' + trim(cand.first_page)].push_back(id);
        records_.push_back(std::move(cand));
    }

    size_t size() const { return records_.size(); }

    /// Fixture file schema, one record per line:
    /// meta_id,doi,title,surname,year,volume,first_page,last_page
    static FixtureStore from_csv(std::string_view text) {
        FixtureStore store;
        auto rows = csv::parse(text);
        for (size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (row.empty() || (row.size() == 1 && trim(row[0]).empty())) continue;
            if (i == 0 && !row.empty() && trim(row[0]) == "meta_id") continue; // header
            if (row.size() < 8)
                throw ParseError("fixture csv: expected 8 columns at line " +
                                 std::to_string(i + 1));
            Candidate cand;
            cand.meta_id = trim(row[0]);
            cand.doi = trim(row[1]);
            cand.title = row[2];
            cand.first_author_surname = row[3];
            cand.year = parse_year_field(row[4]);
            cand.volume = row[5];
            cand.first_page = row[6];
            cand.last_page = row[7];
            if (cand.meta_id.empty())
                throw ParseError("fixture csv: empty meta_id at line " + std::to_string(i + 1));
            store.add(std::move(cand));
        }
        return store;
    }

    static FixtureStore from_json(std::string_view text) {
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("fixture json: ") + e.what());
        }
        if (!root.is_array()) throw ParseError("fixture json: expected an array of records");
        FixtureStore store;
        for (const auto& item : root) {
            Candidate cand;
            auto str = [&](const char* k) {
                return item.contains(k) && item[k].is_string() ? item[k].get<std::string>()
                                                               : std::string();
            };
            cand.meta_id = trim(str("meta_id"));
            cand.doi = str("doi");
            cand.title = str("title");
            cand.first_author_surname = str("surname");
            if (item.contains("year") && item["year"].is_number_integer())
                cand.year = item["year"].get<int>();
            else
                cand.year = parse_year_field(str("year"));
            cand.volume = str("volume");
            cand.first_page = str("first_page");
            cand.last_page = str("last_page");
            if (cand.meta_id.empty()) throw ParseError("fixture json: record without meta_id");
            store.add(std::move(cand));
        }
        return store;
    }

    static FixtureStore from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("fixture store: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
            return from_json(text);
        return from_csv(text);
    }

    StoreQueryResult retrieve_candidates(const Reference& probe, QueryTier tier, int limit,
                                         bool ignore_year = false) override {
        require_fields(probe, tier, ignore_year);
        std::vector<size_t> pool = candidate_pool(probe, tier);

        StoreQueryResult result;
        result.tier = tier;
        std::set<size_t> seen;
        for (size_t id : pool) {
            if (!seen.insert(id).second) continue;
            const Candidate& cand = records_[id];
            if (!matches_tier(probe, cand, tier, ignore_year)) continue;
            result.candidates.push_back(cand);
        }
        std::sort(result.candidates.begin(), result.candidates.end(),
                  [](const Candidate& a, const Candidate& b) { return a.meta_id < b.meta_id; });
        if (static_cast<int>(result.candidates.size()) > limit)
            result.candidates.resize(static_cast<size_t>(limit));
        return result;
    }

    std::optional<Candidate> doi_exists(const std::string& doi) override {
        auto it = doi_index_.find(normalize_doi(doi));
        if (it == doi_index_.end() || it->second.empty()) return std::nullopt;
        // Deterministic pick when several records share a DOI.
        size_t best = it->second.front();
        for (size_t id : it->second)
            if (records_[id].meta_id < records_[best].meta_id) best = id;
        return records_[best];
    }

private:
    static void require_fields(const Reference& probe, QueryTier tier, bool ignore_year) {
        for (Field f : tier_mandatory_fields(tier)) {
            if (ignore_year && f == Field::Year) continue;
            if (!probe.has(f))
                throw std::invalid_argument(std::string("retrieve_candidates: mandatory field `") +
                                            field_name(f) + "` is empty for tier " +
                                            tier_label(tier));
        }
    }

    // Index pools are keyed on non-year fields; the year tolerance (and the
    // retry's year wildcard) applies in matches_tier.
    std::vector<size_t> candidate_pool(const Reference& probe, QueryTier tier) const {
        auto from = [](const std::unordered_map<std::string, std::vector<size_t>>& index,
                       const std::string& key) {
            auto it = index.find(key);
            return it == index.end() ? std::vector<size_t>{} : it->second;
        };
        switch (tier) {
            case QueryTier::Q1YearDoi:
            case QueryTier::Q2DoiTitle:
                return from(doi_index_, normalize_doi(probe.doi));
            case QueryTier::Q3AuthTitle:
            case QueryTier::Q4YearAuthPage:
            case QueryTier::Q6YearAuthVol:
                return from(surname_index_, normalize_name(probe.first_author_surname));
            case QueryTier::Q5YearVolPage:
                return from(vol_page_index_, trim(probe.volume) + '\x1f' + trim(probe.first_page));
        }
        return {};
    }

    bool matches_tier(const Reference& probe, const Candidate& cand, QueryTier tier,
                      bool ignore_year) const {
        for (Field f : tier_mandatory_fields(tier)) {
            switch (f) {
                case Field::Year:
                    if (ignore_year) break;
                    if (!cand.year || !probe.year) return false;
                    if (std::abs(*cand.year - *probe.year) > 1) return false; // +/-1 admitted
                    break;
                case Field::Doi:
                    if (!field_present(cand.doi) || cand.doi != normalize_doi(probe.doi))
                        return false;
                    break;
                case Field::ArticleTitle: {
                    // Retrieval-time title equality is exact on normalized
                    // strings; fuzzy comparison happens in scoring.
                    if (!field_present(cand.title)) return false;
                    if (normalize_title(cand.title) != normalize_title(probe.article_title))
                        return false;
                    break;
                }
                case Field::AuthorSurname:
                    if (!field_present(cand.first_author_surname)) return false;
                    if (normalize_name(cand.first_author_surname) !=
                        normalize_name(probe.first_author_surname))
                        return false;
                    break;
                case Field::Volume:
                    if (!field_present(cand.volume) || trim(cand.volume) != trim(probe.volume))
                        return false;
                    break;
                case Field::FirstPage:
                    if (!field_present(cand.first_page) ||
                        trim(cand.first_page) != trim(probe.first_page))
                        return false;
                    break;
                default:
                    break;
            }
        }
        return true;
    }

    std::vector<Candidate> records_;
    std::unordered_map<std::string, std::vector<size_t>> doi_index_;
    std::unordered_map<std::string, std::vector<size_t>> surname_index_;
    std::unordered_map<std::string, std::vector<size_t>> vol_page_index_;
};

} // namespace bibmatch
