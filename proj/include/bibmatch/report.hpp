#pragma once

// Run artifacts: matched/unmatched CSVs per input file, the aggregate
// statistics text file, and a self-contained HTML report.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "bibmatch/checkpoint.hpp"
#include "bibmatch/csv.hpp"
#include "bibmatch/matcher.hpp"
#include "bibmatch/stats.hpp"

namespace bibmatch {

inline const std::vector<std::string>& matched_csv_header() {
    static const std::vector<std::string> header = {
        "ref_key", "reference_title", "matched_title", "score", "doi", "meta_id", "query_tier"};
    return header;
}

inline const std::vector<std::string>& unmatched_csv_header() {
    static const std::vector<std::string> header = {
        "ref_key", "year", "volume", "first_page", "first_author_surname", "article_title",
        "volume_title", "journal_title", "doi", "unstructured", "failure_type",
        "score_original", "score_after_grobid", "score_without_year", "grobid_attempted"};
    return header;
}

/// Matched rows in source order. Outcomes that are not matches are ignored,
/// so the full per-file outcome list can be passed straight through.
inline std::string render_matched_csv(const std::vector<MatchOutcome>& outcomes) {
    std::string out = csv::make_row(matched_csv_header());
    for (const MatchOutcome& outcome : outcomes) {
        if (outcome.status != MatchStatus::Matched) continue;
        out += csv::make_row({outcome.ref_key, outcome.reference.article_title,
                              outcome.matched_title,
                              std::to_string(outcome.score ? outcome.score->total : 0),
                              outcome.matched_doi, outcome.matched_meta_id,
                              outcome.query_tier ? tier_label(*outcome.query_tier) : ""});
    }
    return out;
}

/// Diagnostics for everything that failed to match; absent scores become
/// empty cells.
inline std::string render_unmatched_csv(const std::vector<MatchOutcome>& outcomes) {
    auto opt_cell = [](const std::optional<int>& v) {
        return v ? std::to_string(*v) : std::string();
    };
    std::string out = csv::make_row(unmatched_csv_header());
    for (const MatchOutcome& outcome : outcomes) {
        if (outcome.status == MatchStatus::Matched) continue;
        const Reference& ref = outcome.reference;
        out += csv::make_row({outcome.ref_key,
                              ref.year ? std::to_string(*ref.year) : "",
                              ref.volume, ref.first_page, ref.first_author_surname,
                              ref.article_title, ref.volume_title, ref.journal_title, ref.doi,
                              ref.unstructured, status_label(outcome.status),
                              opt_cell(outcome.score_original),
                              opt_cell(outcome.score_after_grobid),
                              opt_cell(outcome.score_without_year),
                              outcome.grobid_attempted ? "true" : "false"});
    }
    return out;
}

inline void write_matched_csv(const std::vector<MatchOutcome>& outcomes,
                              const std::filesystem::path& path) {
    write_file_atomic(path, render_matched_csv(outcomes));
}

inline void write_unmatched_csv(const std::vector<MatchOutcome>& outcomes,
                                const std::filesystem::path& path) {
    write_file_atomic(path, render_unmatched_csv(outcomes));
}

/// Tier/count pairs ordered most successful first (ties in tier order).
inline std::vector<std::pair<QueryTier, long>> tiers_by_count(const AggregateStats& stats) {
    std::vector<std::pair<QueryTier, long>> tiers(stats.matches_by_tier.begin(),
                                                  stats.matches_by_tier.end());
    std::stable_sort(tiers.begin(), tiers.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return tiers;
}

inline std::string render_stats_txt(const AggregateStats& stats) {
    std::ostringstream out;
    out << "total_files_attempted: " << stats.total_files_attempted << "\n"
        << "files_processed: " << stats.files_processed << "\n"
        << "empty_files: " << stats.empty_files << "\n"
        << "files_with_errors: " << stats.files_with_errors << "\n"
        << "references_total: " << stats.references_total << "\n"
        << "references_matched: " << stats.references_matched << "\n"
        << "grobid_attempts: " << stats.grobid_attempts << "\n"
        << "grobid_successes: " << stats.grobid_successes << "\n";
    if (stats.references_total > 0) {
        out << "match_rate: " << std::fixed << std::setprecision(4) << stats.match_rate()
            << "\n";
    } else {
        out << "match_rate: n/a\n";
    }
    out << "matches_by_tier:\n";
    for (const auto& [tier, count] : tiers_by_count(stats))
        out << "  " << tier_label(tier) << ": " << count << "\n";
    return out.str();
}

inline void write_stats_txt(const AggregateStats& stats, const std::filesystem::path& path) {
    write_file_atomic(path, render_stats_txt(stats));
}

/// Run parameters echoed into the HTML report.
struct ReportParams {
    int threshold = 26;
    bool use_doi = true;
    int candidate_limit = 50;
    double rate = 2.5;
    double burst = 10;
    int batch_size = 3;
    double batch_pause_seconds = 10;
    int ref_concurrency = 10;
    std::string store_description;
};

namespace report_detail {

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline std::string fmt(double v, int precision = 2) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

} // namespace report_detail

/// Single self-contained page (inline styles, no external assets). Byte
/// output is deterministic for identical inputs and a fixed `timestamp`.
inline std::string render_html_report(const AggregateStats& stats,
                                      const std::vector<PerFileSummary>& files,
                                      const ReportParams& params, std::string_view timestamp) {
    using report_detail::fmt;
    using report_detail::html_escape;
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
         << "<title>Reference matching report</title>\n"
         << "<style>\n"
         << "body{font-family:sans-serif;margin:2em;color:#222;}\n"
         << "table{border-collapse:collapse;margin:1em 0;}\n"
         << "th,td{border:1px solid #bbb;padding:4px 10px;text-align:left;}\n"
         << "th{background:#eee;}\n"
         << ".bar{background:#4a78b0;height:14px;display:inline-block;}\n"
         << ".muted{color:#777;}\n"
         << "</style>\n</head>\n<body>\n"
         << "<h1>Reference matching report</h1>\n"
         << "<p class=\"muted\">Generated: " << html_escape(timestamp) << "</p>\n";

    html << "<h2>Aggregate statistics</h2>\n<table>\n"
         << "<tr><th>Metric</th><th>Value</th></tr>\n"
         << "<tr><td>total_files_attempted</td><td>" << stats.total_files_attempted
         << "</td></tr>\n"
         << "<tr><td>files_processed</td><td>" << stats.files_processed << "</td></tr>\n"
         << "<tr><td>empty_files</td><td>" << stats.empty_files << "</td></tr>\n"
         << "<tr><td>files_with_errors</td><td>" << stats.files_with_errors << "</td></tr>\n"
         << "<tr><td>references_total</td><td>" << stats.references_total << "</td></tr>\n"
         << "<tr><td>references_matched</td><td>" << stats.references_matched << "</td></tr>\n"
         << "<tr><td>match_rate</td><td>"
         << (stats.references_total > 0 ? fmt(100.0 * stats.match_rate()) + "%" : "n/a")
         << "</td></tr>\n"
         << "<tr><td>grobid_attempts</td><td>" << stats.grobid_attempts << "</td></tr>\n"
         << "<tr><td>grobid_successes</td><td>" << stats.grobid_successes << "</td></tr>\n"
         << "</table>\n";

    html << "<h2>Matches by query</h2>\n<table>\n"
         << "<tr><th>Query</th><th>Matches</th><th></th></tr>\n";
    long max_count = 1;
    for (const auto& [tier, count] : stats.matches_by_tier) max_count = std::max(max_count, count);
    for (const auto& [tier, count] : tiers_by_count(stats)) {
        int width = static_cast<int>(240.0 * static_cast<double>(count) /
                                     static_cast<double>(max_count));
        html << "<tr><td>" << html_escape(tier_label(tier)) << "</td><td>" << count
             << "</td><td><span class=\"bar\" style=\"width:" << width
             << "px\"></span></td></tr>\n";
    }
    html << "</table>\n";

    html << "<h2>Parameters</h2>\n<table>\n"
         << "<tr><th>Parameter</th><th>Value</th></tr>\n"
         << "<tr><td>threshold</td><td>" << params.threshold << "</td></tr>\n"
         << "<tr><td>use_doi</td><td>" << (params.use_doi ? "true" : "false") << "</td></tr>\n"
         << "<tr><td>candidate_limit</td><td>" << params.candidate_limit << "</td></tr>\n"
         << "<tr><td>rate (req/s)</td><td>" << fmt(params.rate, 2) << "</td></tr>\n"
         << "<tr><td>burst</td><td>" << fmt(params.burst, 0) << "</td></tr>\n"
         << "<tr><td>batch_size</td><td>" << params.batch_size << "</td></tr>\n"
         << "<tr><td>batch_pause (s)</td><td>" << fmt(params.batch_pause_seconds, 0)
         << "</td></tr>\n"
         << "<tr><td>ref_concurrency</td><td>" << params.ref_concurrency << "</td></tr>\n";
    if (!params.store_description.empty())
        html << "<tr><td>store</td><td>" << html_escape(params.store_description)
             << "</td></tr>\n";
    html << "</table>\n";

    html << "<h2>Files</h2>\n<table>\n"
         << "<tr><th>File</th><th>Outcome</th><th>References</th><th>Matched</th></tr>\n";
    for (const PerFileSummary& file : files) {
        html << "<tr><td>" << html_escape(file.base) << "</td><td>"
             << file_outcome_label(file.outcome) << "</td><td>" << file.references
             << "</td><td>" << file.matched << "</td></tr>\n";
    }
    html << "</table>\n</body>\n</html>\n";
    return html.str();
}

/// Best-effort: report failures are logged, never fatal to the run.
inline void write_html_report(const AggregateStats& stats,
                              const std::vector<PerFileSummary>& files,
                              const ReportParams& params, std::string_view timestamp,
                              const std::filesystem::path& path) {
    try {
        write_file_atomic(path, render_html_report(stats, files, params, timestamp));
    } catch (const std::exception& e) {
        logging::error("html_report_failed", {{"path", path.string()}, {"reason", e.what()}});
    }
}

} // namespace bibmatch
