#pragma once

// Directory-scale orchestration: batched file processing with inter-batch
// pauses, bounded per-file reference parallelism, checkpointed resume, and
// aggregate statistics + reports at the end of the run.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bibmatch/checkpoint.hpp"
#include "bibmatch/ingest.hpp"
#include "bibmatch/log.hpp"
#include "bibmatch/matcher.hpp"
#include "bibmatch/netguard.hpp"
#include "bibmatch/report.hpp"
#include "bibmatch/stats.hpp"

namespace bibmatch {

enum class InputFormat { Auto, Crossref, Tei };

struct BatchConfig {
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    std::filesystem::path checkpoint_file; // empty: <output_dir>/checkpoint.log
    InputFormat format = InputFormat::Auto;
    int batch_size = 3;
    double batch_pause_seconds = 10.0;
    int ref_concurrency = 10;
    int error_threshold = 10;          // consecutive server errors before pausing
    double error_pause_seconds = 300.0;
    Clock* clock = &real_clock();
    HttpGuard* guard = nullptr;        // provides the consecutive-error counter
    std::string report_timestamp;      // fixed value keeps the HTML deterministic
    ReportParams report_params;
};

/// Matches every reference of one file with at most `concurrency` workers;
/// results keep source order.
inline std::vector<MatchOutcome> match_references(const std::vector<Reference>& refs,
                                                  Store& store, CitationParser* parser,
                                                  const MatchConfig& cfg, int concurrency) {
    std::vector<MatchOutcome> outcomes(refs.size());
    if (refs.empty()) return outcomes;
    int workers = std::max(1, std::min<int>(concurrency, static_cast<int>(refs.size())));
    if (workers == 1) {
        for (size_t i = 0; i < refs.size(); ++i)
            outcomes[i] = match_reference(refs[i], store, parser, cfg);
        return outcomes;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    std::mutex error_mtx;
    std::exception_ptr first_error;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= refs.size()) return;
                try {
                    outcomes[i] = match_reference(refs[i], store, parser, cfg);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mtx);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return outcomes;
}

namespace batch_detail {

inline InputFormat detect_format(const std::filesystem::path& path, InputFormat configured) {
    if (configured != InputFormat::Auto) return configured;
    std::string ext = path.extension().string();
    if (ext == ".json") return InputFormat::Crossref;
    if (ext == ".xml") return InputFormat::Tei;
    return InputFormat::Auto;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace batch_detail

struct FileRunResult {
    FileOutcome outcome = FileOutcome::Done;
    std::string base;
    std::vector<MatchOutcome> outcomes;
    long references = 0;
    long matched = 0;
};

/// Parses one input file, matches its references and writes the per-file
/// matched/unmatched CSVs (atomically, so reprocessing after a crash is
/// idempotent). Zero-reference files produce header-only outputs and count
/// as empty, not as errors.
inline FileRunResult process_file(const std::filesystem::path& path, InputFormat format,
                                  Store& store, CitationParser* parser, const MatchConfig& cfg,
                                  const std::filesystem::path& output_dir,
                                  int ref_concurrency) {
    FileRunResult result;
    result.base = path.stem().string();

    InputFormat effective = batch_detail::detect_format(path, format);
    if (effective == InputFormat::Auto)
        throw std::runtime_error("cannot determine format of " + path.string());

    std::string bytes = batch_detail::read_file(path);
    CitingWork work = effective == InputFormat::Crossref ? parse_crossref_work(bytes)
                                                         : parse_tei_document(bytes);
    work.source_path = path.string();

    result.references = static_cast<long>(work.references.size());
    if (!work.references.empty())
        result.outcomes = match_references(work.references, store, parser, cfg, ref_concurrency);
    for (const MatchOutcome& outcome : result.outcomes)
        if (outcome.status == MatchStatus::Matched) ++result.matched;

    write_matched_csv(result.outcomes, output_dir / (result.base + "_matches.csv"));
    write_unmatched_csv(result.outcomes, output_dir / (result.base + "_unmatched.csv"));

    result.outcome = work.references.empty() ? FileOutcome::Empty : FileOutcome::Done;
    return result;
}

/// Collects the input files a run would process, sorted by name.
inline std::vector<std::filesystem::path> collect_input_files(
    const std::filesystem::path& input_dir, InputFormat format) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(input_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        bool eligible = format == InputFormat::Crossref ? ext == ".json"
                        : format == InputFormat::Tei    ? ext == ".xml"
                                                        : (ext == ".json" || ext == ".xml");
        if (eligible) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Runs a whole directory: files in batches of `batch_size` (processed in
/// parallel within a batch) with pauses in between, checkpointing every 10
/// completed files, skipping files a previous run already finished. Per-file
/// errors are recorded and do not abort the run.
inline AggregateStats process_directory(const BatchConfig& batch_cfg, Store& store,
                                        CitationParser* parser, const MatchConfig& match_cfg) {
    if (!std::filesystem::is_directory(batch_cfg.input_dir))
        throw std::invalid_argument("input directory does not exist: " +
                                    batch_cfg.input_dir.string());
    std::filesystem::create_directories(batch_cfg.output_dir);

    std::filesystem::path checkpoint_path = batch_cfg.checkpoint_file.empty()
                                                ? batch_cfg.output_dir / "checkpoint.log"
                                                : batch_cfg.checkpoint_file;
    Checkpoint checkpoint(checkpoint_path);

    std::vector<std::filesystem::path> files =
        collect_input_files(batch_cfg.input_dir, batch_cfg.format);
    std::vector<std::filesystem::path> pending;
    for (const auto& file : files) {
        if (checkpoint.is_finished(file.string())) {
            logging::info("file_skipped_checkpointed", {{"file", file.string()}});
            continue;
        }
        pending.push_back(file);
    }

    AggregateStats stats;
    std::vector<PerFileSummary> summaries;
    std::mutex coordinator_mtx;

    auto record_result = [&](const std::filesystem::path& path, const FileRunResult& result) {
        std::lock_guard<std::mutex> lock(coordinator_mtx);
        ++stats.total_files_attempted;
        PerFileSummary summary{result.base, result.outcome, result.references, result.matched};
        switch (result.outcome) {
            case FileOutcome::Done: ++stats.files_processed; break;
            case FileOutcome::Empty: ++stats.empty_files; break;
            case FileOutcome::Error: ++stats.files_with_errors; break;
        }
        stats.references_total += result.references;
        stats.references_matched += result.matched;
        for (const MatchOutcome& outcome : result.outcomes) {
            if (outcome.grobid_attempted) {
                ++stats.grobid_attempts;
                if (outcome.status == MatchStatus::Matched) ++stats.grobid_successes;
            }
            if (outcome.status == MatchStatus::Matched && outcome.query_tier)
                ++stats.matches_by_tier[*outcome.query_tier];
        }
        summaries.push_back(std::move(summary));
        checkpoint.record(path.string(), result.outcome);
    };

    size_t batch_size = batch_cfg.batch_size > 0 ? static_cast<size_t>(batch_cfg.batch_size) : 1;
    for (size_t start = 0; start < pending.size(); start += batch_size) {
        if (start > 0 && batch_cfg.batch_pause_seconds > 0) {
            logging::info("batch_pause",
                          {{"seconds", std::to_string(batch_cfg.batch_pause_seconds)}});
            batch_cfg.clock->sleep_for(batch_cfg.batch_pause_seconds);
        }
        if (batch_cfg.guard &&
            batch_cfg.guard->consecutive_server_errors() >= batch_cfg.error_threshold) {
            logging::warn("error_threshold_pause",
                          {{"consecutive_errors",
                            std::to_string(batch_cfg.guard->consecutive_server_errors())},
                           {"pause_seconds", std::to_string(batch_cfg.error_pause_seconds)}});
            batch_cfg.clock->sleep_for(batch_cfg.error_pause_seconds);
            batch_cfg.guard->reset_consecutive_server_errors();
        }

        size_t end = std::min(pending.size(), start + batch_size);
        std::vector<std::thread> workers;
        workers.reserve(end - start);
        for (size_t i = start; i < end; ++i) {
            workers.emplace_back([&, i] {
                const std::filesystem::path& path = pending[i];
                FileRunResult result;
                try {
                    result = process_file(path, batch_cfg.format, store, parser, match_cfg,
                                          batch_cfg.output_dir, batch_cfg.ref_concurrency);
                } catch (const std::exception& e) {
                    logging::error("file_failed", {{"file", path.string()}, {"reason", e.what()}});
                    result.base = path.stem().string();
                    result.outcome = FileOutcome::Error;
                    result.outcomes.clear();
                    result.references = 0;
                    result.matched = 0;
                }
                record_result(path, result);
            });
        }
        for (std::thread& t : workers) t.join();
        checkpoint.end_batch();
    }

    checkpoint.flush();

    std::sort(summaries.begin(), summaries.end(),
              [](const PerFileSummary& a, const PerFileSummary& b) { return a.base < b.base; });
    std::string timestamp = batch_cfg.report_timestamp;
    if (timestamp.empty()) {
        std::time_t t = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M:%S UTC", &tm);
        timestamp = buf;
    }
    write_stats_txt(stats, batch_cfg.output_dir / "aggregate_statistics.txt");
    write_html_report(stats, summaries, batch_cfg.report_params, timestamp,
                      batch_cfg.output_dir / "report.html");
    return stats;
}

} // namespace bibmatch
