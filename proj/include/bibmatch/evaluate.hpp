#pragma once

// Evaluation harness treating the store's DOI coverage as ground truth:
//   check-doi  verifies every reference DOI of each input file against the
//              store and writes per-file results/unmatched/statistics CSVs;
//   compare    reports DOIs missed and earned by the matcher, per file base;
//   metrics    computes TP/FP/FN/TN and precision/recall/F1/accuracy from
//              the POS/NEG/PRED sets.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bibmatch/checkpoint.hpp"
#include "bibmatch/csv.hpp"
#include "bibmatch/ingest.hpp"
#include "bibmatch/log.hpp"
#include "bibmatch/store.hpp"

namespace bibmatch {

struct EvaluationCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    // Undefined ratios (zero denominators) stay absent, never become 0.
    std::optional<double> precision, recall, f1, accuracy;

    static EvaluationCounts from_counts(long tp, long fp, long fn, long tn) {
        EvaluationCounts c;
        c.tp = tp;
        c.fp = fp;
        c.fn = fn;
        c.tn = tn;
        if (tp + fp > 0) c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        if (tp + fn > 0) c.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        if (c.precision && c.recall && (*c.precision + *c.recall) > 0)
            c.f1 = 2.0 * *c.precision * *c.recall / (*c.precision + *c.recall);
        if (tp + fp + fn + tn > 0)
            c.accuracy = static_cast<double>(tp + tn) / static_cast<double>(tp + fp + fn + tn);
        return c;
    }
};

namespace evaluate_detail {

inline std::string metric_cell(const std::optional<double>& v) {
    if (!v) return {};
    std::ostringstream ss;
    ss.precision(6);
    ss << std::fixed << *v;
    return ss.str();
}

/// Base name of an output file: stem minus the known suffix.
inline std::optional<std::string> base_for_suffix(const std::filesystem::path& path,
                                                  std::string_view suffix) {
    if (path.extension() != ".csv") return std::nullopt;
    std::string stem = path.stem().string();
    if (stem.size() <= suffix.size() || !stem.ends_with(suffix)) return std::nullopt;
    return stem.substr(0, stem.size() - suffix.size());
}

/// Normalized, deduplicated DOI set from one column of a CSV file; rows with
/// an empty DOI are ignored.
inline std::set<std::string> doi_set_from_csv(const std::filesystem::path& path,
                                              const std::string& column) {
    csv::Table table = csv::Table::from_file(path.string());
    std::set<std::string> out;
    for (size_t i = 0; i < table.size(); ++i) {
        std::string doi = table.cell(i, column);
        if (is_blank(doi)) continue;
        out.insert(normalize_doi(doi));
    }
    return out;
}

inline std::map<std::string, std::filesystem::path> files_by_base(
    const std::filesystem::path& dir, std::string_view suffix) {
    std::map<std::string, std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (auto base = base_for_suffix(entry.path(), suffix)) out[*base] = entry.path();
    }
    return out;
}

} // namespace evaluate_detail

struct CheckDoiStats {
    long files = 0;
    long total_queries = 0;
    long successful_queries = 0;
};

/// For every Crossref JSON file in `json_dir`: extract the reference DOIs,
/// normalize and deduplicate them, probe the store, and write
/// <base>_doi_results.csv, <base>_unmatched_dois.csv, <base>_doi_statistics.csv.
inline CheckDoiStats check_doi(const std::filesystem::path& json_dir, Store& store,
                               const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(json_dir))
        throw std::invalid_argument("check_doi: not a directory: " + json_dir.string());
    std::filesystem::create_directories(out_dir);

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(json_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    CheckDoiStats stats;
    for (const auto& file : files) {
        std::string base = file.stem().string();
        try {
            std::ifstream in(file, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            CitingWork work = parse_crossref_work(ss.str());

            // Set semantics: each DOI queried and reported once per file.
            std::vector<std::string> dois;
            std::set<std::string> seen;
            for (const Reference& ref : work.references) {
                if (!ref.has(Field::Doi)) continue;
                std::string doi = normalize_doi(ref.doi);
                if (seen.insert(doi).second) dois.push_back(doi);
            }

            std::string results = csv::make_row({"doi", "meta_id", "title",
                                                 "first_author_surname", "year", "volume",
                                                 "first_page", "last_page"});
            std::string unmatched = csv::make_row({"doi"});
            long found = 0;
            for (const std::string& doi : dois) {
                if (std::optional<Candidate> cand = store.doi_exists(doi)) {
                    ++found;
                    results += csv::make_row(
                        {doi, cand->meta_id, cand->title, cand->first_author_surname,
                         cand->year ? std::to_string(*cand->year) : "", cand->volume,
                         cand->first_page, cand->last_page});
                } else {
                    unmatched += csv::make_row({doi});
                }
            }
            std::string statistics = csv::make_row({"total_queries", "successful_queries"});
            statistics += csv::make_row(
                {std::to_string(dois.size()), std::to_string(found)});

            write_file_atomic(out_dir / (base + "_doi_results.csv"), results);
            write_file_atomic(out_dir / (base + "_unmatched_dois.csv"), unmatched);
            write_file_atomic(out_dir / (base + "_doi_statistics.csv"), statistics);

            ++stats.files;
            stats.total_queries += static_cast<long>(dois.size());
            stats.successful_queries += found;
        } catch (const std::exception& e) {
            logging::error("check_doi_file_failed", {{"file", file.string()},
                                                     {"reason", e.what()}});
        }
    }
    return stats;
}

struct CompareTotals {
    long missed = 0; // in doi_results but not predicted
    long earned = 0; // predicted but not in doi_results
};

/// Pairs *_doi_results.csv with *_matches.csv by base filename and writes a
/// single comparison_results.csv of per-DOI missed/earned rows plus trailing
/// aggregate rows. Unpaired files are reported and skipped.
inline CompareTotals compare(const std::filesystem::path& doi_results_dir,
                             const std::filesystem::path& matches_dir,
                             const std::filesystem::path& out_dir) {
    using namespace evaluate_detail;
    std::filesystem::create_directories(out_dir);
    auto results_files = files_by_base(doi_results_dir, "_doi_results");
    auto matches_files = files_by_base(matches_dir, "_matches");

    std::string out = csv::make_row({"file_base", "kind", "doi"});
    CompareTotals totals;
    for (const auto& [base, results_path] : results_files) {
        auto match_it = matches_files.find(base);
        if (match_it == matches_files.end()) {
            logging::warn("compare_unpaired", {{"base", base}, {"side", "doi_results"}});
            continue;
        }
        std::set<std::string> found = doi_set_from_csv(results_path, "doi");
        std::set<std::string> predicted = doi_set_from_csv(match_it->second, "doi");
        for (const std::string& doi : found) {
            if (!predicted.count(doi)) {
                out += csv::make_row({base, "missed", doi});
                ++totals.missed;
            }
        }
        for (const std::string& doi : predicted) {
            if (!found.count(doi)) {
                out += csv::make_row({base, "earned", doi});
                ++totals.earned;
            }
        }
    }
    for (const auto& [base, path] : matches_files) {
        if (!results_files.count(base))
            logging::warn("compare_unpaired", {{"base", base}, {"side", "matches"}});
    }
    out += csv::make_row({"ALL", "missed_total", std::to_string(totals.missed)});
    out += csv::make_row({"ALL", "earned_total", std::to_string(totals.earned)});
    write_file_atomic(out_dir / "comparison_results.csv", out);
    return totals;
}

/// Classification metrics over the POS/NEG/PRED DOI sets, aggregated across
/// file bases present on both sides. Predictions outside POS and NEG fall
/// outside the ground truth and are excluded. Writes
/// overall_evaluation_metrics.csv, metrics_debug_per_base.csv, and a
/// filtered_matches/ directory holding the true-positive rows per base with
/// metadata combined from both sources.
inline EvaluationCounts metrics(const std::filesystem::path& check_doi_dir,
                                const std::filesystem::path& matches_dir,
                                const std::filesystem::path& out_dir) {
    using namespace evaluate_detail;
    std::filesystem::create_directories(out_dir);
    std::filesystem::create_directories(out_dir / "filtered_matches");

    auto results_files = files_by_base(check_doi_dir, "_doi_results");
    auto unmatched_files = files_by_base(check_doi_dir, "_unmatched_dois");
    auto matches_files = files_by_base(matches_dir, "_matches");

    long tp = 0, fp = 0, fn = 0, tn = 0;
    std::string debug = csv::make_row({"file_base", "tp", "fp", "fn", "tn"});

    for (const auto& [base, results_path] : results_files) {
        auto match_it = matches_files.find(base);
        if (match_it == matches_files.end()) {
            logging::warn("metrics_unpaired", {{"base", base}, {"side", "check_doi"}});
            continue;
        }
        std::set<std::string> pos = doi_set_from_csv(results_path, "doi");
        std::set<std::string> neg;
        if (auto neg_it = unmatched_files.find(base); neg_it != unmatched_files.end())
            neg = doi_set_from_csv(neg_it->second, "doi");
        std::set<std::string> pred = doi_set_from_csv(match_it->second, "doi");

        long file_tp = 0, file_fp = 0, file_fn = 0, file_tn = 0;
        for (const std::string& doi : pred) {
            if (pos.count(doi)) ++file_tp;
            else if (neg.count(doi)) ++file_fp;
            // DOIs in neither set fall outside the ground truth: excluded.
        }
        for (const std::string& doi : pos)
            if (!pred.count(doi)) ++file_fn;
        for (const std::string& doi : neg)
            if (!pred.count(doi)) ++file_tn;

        tp += file_tp;
        fp += file_fp;
        fn += file_fn;
        tn += file_tn;
        debug += csv::make_row({base, std::to_string(file_tp), std::to_string(file_fp),
                                std::to_string(file_fn), std::to_string(file_tn)});

        // True-positive rows with metadata from both the matches file and the
        // doi_results file, joined on the DOI.
        csv::Table matches_table = csv::Table::from_file(match_it->second.string());
        csv::Table results_table = csv::Table::from_file(results_path.string());
        std::map<std::string, size_t> results_row_by_doi;
        for (size_t i = 0; i < results_table.size(); ++i) {
            std::string doi = results_table.cell(i, "doi");
            if (!is_blank(doi)) results_row_by_doi.emplace(normalize_doi(doi), i);
        }
        std::string filtered = csv::make_row(
            {"doi", "ref_key", "reference_title", "matched_title", "score", "meta_id",
             "query_tier", "store_title", "store_first_author_surname", "store_year",
             "store_volume", "store_first_page", "store_last_page"});
        for (size_t i = 0; i < matches_table.size(); ++i) {
            std::string doi = matches_table.cell(i, "doi");
            if (is_blank(doi)) continue;
            std::string norm = normalize_doi(doi);
            if (!pos.count(norm)) continue;
            auto row_it = results_row_by_doi.find(norm);
            auto store_cell = [&](const char* column) {
                return row_it == results_row_by_doi.end()
                           ? std::string()
                           : results_table.cell(row_it->second, column);
            };
            filtered += csv::make_row(
                {norm, matches_table.cell(i, "ref_key"), matches_table.cell(i, "reference_title"),
                 matches_table.cell(i, "matched_title"), matches_table.cell(i, "score"),
                 matches_table.cell(i, "meta_id"), matches_table.cell(i, "query_tier"),
                 store_cell("title"), store_cell("first_author_surname"), store_cell("year"),
                 store_cell("volume"), store_cell("first_page"), store_cell("last_page")});
        }
        write_file_atomic(out_dir / "filtered_matches" / (base + "_filtered.csv"), filtered);
    }
    for (const auto& [base, path] : matches_files)
        if (!results_files.count(base))
            logging::warn("metrics_unpaired", {{"base", base}, {"side", "matches"}});

    EvaluationCounts counts = EvaluationCounts::from_counts(tp, fp, fn, tn);
    std::string overall = csv::make_row(
        {"tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy"});
    overall += csv::make_row({std::to_string(counts.tp), std::to_string(counts.fp),
                              std::to_string(counts.fn), std::to_string(counts.tn),
                              metric_cell(counts.precision), metric_cell(counts.recall),
                              metric_cell(counts.f1), metric_cell(counts.accuracy)});
    write_file_atomic(out_dir / "overall_evaluation_metrics.csv", overall);
    write_file_atomic(out_dir / "metrics_debug_per_base.csv", debug);
    return counts;
}

} // namespace bibmatch
