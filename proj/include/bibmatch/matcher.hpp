#pragma once

// Cascade orchestrator: runs the query tiers in order, scores candidates,
// early-stops on acceptance, and drives the two fallbacks (enrichment of
// unstructured references, year-cleared retry for implausible years).

#include <optional>
#include <string>

#include "bibmatch/citation_parser.hpp"
#include "bibmatch/log.hpp"
#include "bibmatch/model.hpp"
#include "bibmatch/store.hpp"

namespace bibmatch {

enum class MatchStatus { Matched, PartialFailure, CompleteFailure };

inline const char* status_label(MatchStatus status) {
    switch (status) {
        case MatchStatus::Matched: return "matched";
        case MatchStatus::PartialFailure: return "partial";
        case MatchStatus::CompleteFailure: return "complete";
    }
    return "?";
}

struct MatchOutcome {
    std::string ref_key;
    MatchStatus status = MatchStatus::CompleteFailure;

    std::string matched_meta_id;
    std::string matched_doi;
    std::string matched_title;
    std::optional<MatchScore> score;
    std::optional<QueryTier> query_tier;

    // Diagnostic scores across the fallback passes; absent when the pass did
    // not run or retrieved no candidates.
    std::optional<int> score_original;
    std::optional<int> score_after_grobid;
    std::optional<int> score_without_year;
    bool grobid_attempted = false;

    /// The reference as it looked after any enrichment; carries the metadata
    /// echoed into the unmatched diagnostics CSV.
    Reference reference;
};

struct ScoredCandidate {
    Candidate candidate;
    MatchScore score;
    QueryTier tier;
};

struct CascadeResult {
    std::optional<ScoredCandidate> best; // highest total over all tiers run
    bool any_candidates = false;
    bool accepted = false; // best satisfied the acceptance rule (early stop)
};

/// Runs tiers Q1..Q6 in order, skipping those whose mandatory fields are
/// empty, and Q1/Q2 when DOI-based strategies are disabled or no DOI is
/// present. Stops at the first tier whose best candidate is accepted; later
/// tiers are never queried. Ties on equal totals go to the smallest meta_id
/// (candidates arrive sorted). With `ignore_year` the year constraint is
/// dropped from year-mandatory tiers instead of skipping them.
inline CascadeResult run_cascade(const Reference& ref, Store& store, const MatchConfig& cfg,
                                 bool ignore_year = false) {
    CascadeResult result;
    for (QueryTier tier : kTierOrder) {
        if (tier_uses_doi(tier) && (!cfg.use_doi || !ref.has(Field::Doi))) continue;
        if (!tier_applicable(ref, tier, ignore_year)) continue;

        StoreQueryResult retrieved =
            store.retrieve_candidates(ref, tier, cfg.candidate_limit, ignore_year);
        if (retrieved.candidates.empty()) continue;
        result.any_candidates = true;

        std::optional<ScoredCandidate> tier_best;
        for (const Candidate& cand : retrieved.candidates) {
            MatchScore score = score_candidate(ref, cand);
            if (!tier_best || score.total > tier_best->score.total)
                tier_best = ScoredCandidate{cand, score, tier};
        }
        if (!result.best || tier_best->score.total > result.best->score.total)
            result.best = tier_best;
        if (accepts(tier_best->score, cfg)) {
            // Early stop: accept within the tier, even though a later, less
            // restrictive tier might hold a higher-scoring match.
            result.best = tier_best;
            result.accepted = true;
            return result;
        }
    }
    return result;
}

/// Copies parser output into the empty fields of `ref`, marking provenance.
/// Populated fields are never overwritten. Parsed DOIs are normalized and
/// merged regardless of the use_doi flag; implausible parsed years are
/// dropped and flagged instead of merged.
inline Reference merge_parsed_fields(const Reference& ref, const ParsedCitation& parsed,
                                     const MatchConfig& cfg) {
    Reference out = ref;
    auto merge_string = [&](std::string Reference::* member, Field field,
                            const std::string& value) {
        if ((out.*member).empty() || is_blank(out.*member)) {
            if (!is_blank(value)) {
                out.*member = trim(value);
                out.enriched_fields.set(field);
                logging::debug("enrichment_merge",
                               {{"ref", ref.key}, {"field", field_name(field)}});
            }
        }
    };
    if (!out.year && parsed.year) {
        if (validate_year(*parsed.year, cfg.current_year, cfg.year_floor)) {
            out.year = parsed.year;
            out.enriched_fields.set(Field::Year);
            logging::debug("enrichment_merge", {{"ref", ref.key}, {"field", "year"}});
        } else {
            out.suspicious_parsed_year = true;
            logging::warn("enrichment_suspicious_year",
                          {{"ref", ref.key}, {"year", std::to_string(*parsed.year)}});
        }
    }
    merge_string(&Reference::first_author_surname, Field::AuthorSurname,
                 parsed.first_author_surname);
    merge_string(&Reference::article_title, Field::ArticleTitle, parsed.article_title);
    merge_string(&Reference::journal_title, Field::JournalTitle, parsed.journal_title);
    merge_string(&Reference::volume, Field::Volume, parsed.volume);
    merge_string(&Reference::first_page, Field::FirstPage, parsed.first_page);
    merge_string(&Reference::last_page, Field::LastPage, parsed.last_page);
    if (!is_blank(parsed.doi)) merge_string(&Reference::doi, Field::Doi, normalize_doi(parsed.doi));
    return out;
}

/// Full per-reference pipeline:
///   1. cascade on the original metadata;
///   2. on failure, parse the unstructured string (when present), merge into
///      empty fields, rerun;
///   3. when the reference still carries an implausible year, rerun with the
///      year constraint cleared;
///   4. otherwise report partial or complete failure.
/// A failing parser service only disables step 2; it never aborts the
/// reference.
inline MatchOutcome match_reference(const Reference& ref, Store& store, CitationParser* parser,
                                    const MatchConfig& cfg) {
    MatchOutcome out;
    out.ref_key = ref.key;
    out.reference = ref;

    auto conclude_match = [&](const ScoredCandidate& best) {
        out.status = MatchStatus::Matched;
        out.matched_meta_id = best.candidate.meta_id;
        out.matched_doi = best.candidate.doi;
        out.matched_title = best.candidate.title;
        out.score = best.score;
        out.query_tier = best.tier;
        logging::debug("reference_matched", {{"ref", ref.key},
                                             {"meta_id", best.candidate.meta_id},
                                             {"tier", tier_label(best.tier)},
                                             {"score", std::to_string(best.score.total)}});
    };

    CascadeResult original = run_cascade(ref, store, cfg);
    bool any_candidates = original.any_candidates;
    if (original.best) out.score_original = original.best->score.total;
    if (original.accepted) {
        conclude_match(*original.best);
        return out;
    }

    Reference current = ref;
    if (ref.has(Field::Unstructured) && parser != nullptr) {
        out.grobid_attempted = true;
        logging::info("enrichment_attempt", {{"ref", ref.key}});
        try {
            ParsedCitation parsed = parser->parse(ref.unstructured);
            current = merge_parsed_fields(ref, parsed, cfg);
            out.reference = current;
            CascadeResult enriched = run_cascade(current, store, cfg);
            any_candidates = any_candidates || enriched.any_candidates;
            if (enriched.best) out.score_after_grobid = enriched.best->score.total;
            if (enriched.accepted) {
                conclude_match(*enriched.best);
                return out;
            }
        } catch (const std::exception& e) {
            // Fallback unavailable; continue with the original metadata.
            logging::warn("enrichment_unavailable", {{"ref", ref.key}, {"reason", e.what()}});
        }
    }

    if (current.year && !validate_year(*current.year, cfg.current_year, cfg.year_floor)) {
        logging::info("year_cleared_retry",
                      {{"ref", ref.key}, {"year", std::to_string(*current.year)}});
        Reference cleared = current;
        cleared.year.reset();
        CascadeResult retried = run_cascade(cleared, store, cfg, /*ignore_year=*/true);
        any_candidates = any_candidates || retried.any_candidates;
        if (retried.best) out.score_without_year = retried.best->score.total;
        if (retried.accepted) {
            conclude_match(*retried.best);
            return out;
        }
    }

    out.status = any_candidates ? MatchStatus::PartialFailure : MatchStatus::CompleteFailure;
    return out;
}

} // namespace bibmatch
