#pragma once

// Domain types and the scoring arithmetic shared by every other component.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <optional>
#include <stdexcept>
#include <string>

#include "bibmatch/text.hpp"

namespace bibmatch {

enum class Field : unsigned {
    Year = 0,
    Volume,
    FirstPage,
    LastPage,
    AuthorSurname,
    ArticleTitle,
    VolumeTitle,
    JournalTitle,
    Doi,
    Unstructured,
};

inline const char* field_name(Field f) {
    switch (f) {
        case Field::Year: return "year";
        case Field::Volume: return "volume";
        case Field::FirstPage: return "first_page";
        case Field::LastPage: return "last_page";
        case Field::AuthorSurname: return "first_author_surname";
        case Field::ArticleTitle: return "article_title";
        case Field::VolumeTitle: return "volume_title";
        case Field::JournalTitle: return "journal_title";
        case Field::Doi: return "doi";
        case Field::Unstructured: return "unstructured";
    }
    return "?";
}

/// Small set of Field flags; records which fields the enrichment fallback filled.
class FieldSet {
public:
    void set(Field f) { bits_ |= bit(f); }
    bool test(Field f) const { return (bits_ & bit(f)) != 0; }
    bool empty() const { return bits_ == 0; }
    bool operator==(const FieldSet&) const = default;

private:
    static uint16_t bit(Field f) { return static_cast<uint16_t>(1u << static_cast<unsigned>(f)); }
    uint16_t bits_ = 0;
};

/// One cited work as described by a citing source: partial metadata plus an
/// optional raw citation string. String fields use ""/whitespace for absent;
/// DOIs are stored normalized.
struct Reference {
    std::string key; // source-assigned id, e.g. "ref1"; unique within its file
    std::optional<int> year;
    std::string volume;
    std::string first_page;
    std::string last_page;
    std::string first_author_surname;
    std::string article_title;
    std::string volume_title;
    std::string journal_title;
    std::string doi;
    std::string unstructured;

    FieldSet enriched_fields;        // marked only for fields that were empty before merge
    bool suspicious_parsed_year = false;

    bool has(Field f) const {
        switch (f) {
            case Field::Year: return year.has_value();
            case Field::Volume: return field_present(volume);
            case Field::FirstPage: return field_present(first_page);
            case Field::LastPage: return field_present(last_page);
            case Field::AuthorSurname: return field_present(first_author_surname);
            case Field::ArticleTitle: return field_present(article_title);
            case Field::VolumeTitle: return field_present(volume_title);
            case Field::JournalTitle: return field_present(journal_title);
            case Field::Doi: return field_present(doi);
            case Field::Unstructured: return field_present(unstructured);
        }
        return false;
    }
};

/// One record retrieved from the bibliographic store.
struct Candidate {
    std::string meta_id; // store identifier of the bibliographic resource
    std::string doi;     // normalized
    std::string title;
    std::string first_author_surname;
    std::optional<int> year;
    std::string volume;
    std::string first_page;
    std::string last_page;

    bool operator==(const Candidate&) const = default;
};

// Per-field weights of the scoring scheme.
inline constexpr int kDoiPoints = 15;
inline constexpr int kTitlePointsMax = 14;
inline constexpr int kAuthorPoints = 7;
inline constexpr int kYearPoints = 1;
inline constexpr int kVolumePoints = 3;
inline constexpr int kPagePoints = 8;
inline constexpr int kMaxScore = 48;

/// Per-field point breakdown for one (Reference, Candidate) pair.
struct MatchScore {
    int doi_points = 0;    // 0 or 15
    int title_points = 0;  // 0 or 10..14
    int author_points = 0; // 0 or 7
    int year_points = 0;   // 0 or 1
    bool adjacent_year = false; // tracked but never scored
    int volume_points = 0; // 0 or 3
    int page_points = 0;   // 0 or 8
    int total = 0;

    bool operator==(const MatchScore&) const = default;
};

struct MatchConfig {
    int threshold = 26;
    double adaptive_fraction = 0.9; // accept best candidates at >= 90% of threshold
    bool use_doi = true;            // false skips DOI-based query tiers only
    int year_floor = 1700;
    int candidate_limit = 50;       // per query tier
    int current_year = current_calendar_year();

    static int current_calendar_year() {
        std::time_t t = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&t, &tm);
        return tm.tm_year + 1900;
    }

    void validate() const {
        if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
        if (!(adaptive_fraction > 0.0 && adaptive_fraction <= 1.0))
            throw std::invalid_argument("adaptive_fraction must be in (0, 1]");
        if (candidate_limit < 1) throw std::invalid_argument("candidate_limit must be >= 1");
    }
};

/// Points awarded for a title similarity ratio. The >=0.95 and >=0.90 bands
/// both award 13.
inline int title_points(double similarity) {
    constexpr double eps = 1e-9; // guards ratios like 19/20 computed in floating point
    if (similarity >= 1.0 - eps) return 14;
    if (similarity >= 0.95 - eps) return 13;
    if (similarity >= 0.90 - eps) return 13;
    if (similarity >= 0.85 - eps) return 12;
    if (similarity >= 0.80 - eps) return 11;
    if (similarity >= 0.75 - eps) return 10;
    return 0;
}

/// Plausibility interval for publication years: [floor, current_year + 1].
inline bool validate_year(int year, int current_year, int year_floor = 1700) {
    return year >= year_floor && year <= current_year + 1;
}

/// Field-by-field comparison of a reference against a store candidate.
/// Values are compared, not roles; every comparison is symmetric.
inline MatchScore score_candidate(const Reference& ref, const Candidate& cand) {
    MatchScore s;

    if (field_present(ref.doi) && field_present(cand.doi) &&
        normalize_doi(ref.doi) == normalize_doi(cand.doi)) {
        s.doi_points = kDoiPoints;
    }

    if (field_present(ref.article_title) && field_present(cand.title)) {
        std::string a = normalize_title(ref.article_title);
        std::string b = normalize_title(cand.title);
        if (!a.empty() && !b.empty()) // a title that folds away entirely is never scored
            s.title_points = title_points(title_similarity(a, b));
    }

    if (field_present(ref.first_author_surname) && field_present(cand.first_author_surname) &&
        normalize_name(ref.first_author_surname) == normalize_name(cand.first_author_surname)) {
        s.author_points = kAuthorPoints;
    }

    if (ref.year && cand.year) {
        if (*ref.year == *cand.year) s.year_points = kYearPoints;
        else if (std::abs(*ref.year - *cand.year) == 1) s.adjacent_year = true;
    }

    if (field_present(ref.volume) && field_present(cand.volume) &&
        trim(ref.volume) == trim(cand.volume)) {
        s.volume_points = kVolumePoints;
    }

    // Page points need matching start pages; end pages must agree when both
    // sides carry one.
    if (field_present(ref.first_page) && field_present(cand.first_page) &&
        trim(ref.first_page) == trim(cand.first_page)) {
        bool last_ok = !field_present(ref.last_page) || !field_present(cand.last_page) ||
                       trim(ref.last_page) == trim(cand.last_page);
        if (last_ok) s.page_points = kPagePoints;
    }

    s.total = s.doi_points + s.title_points + s.author_points + s.year_points +
              s.volume_points + s.page_points;
    return s;
}

/// Acceptance rule: meets the threshold outright, or reaches the adaptive
/// floor (90% of the threshold by default).
inline bool accepts(const MatchScore& score, const MatchConfig& cfg) {
    int adaptive_floor =
        static_cast<int>(std::floor(cfg.adaptive_fraction * cfg.threshold + 1e-9));
    return score.total >= cfg.threshold || score.total >= adaptive_floor;
}

} // namespace bibmatch
