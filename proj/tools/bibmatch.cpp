// Command-line entry point: match (file/directory), fetch, evaluate.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bibmatch/batch.hpp"
#include "bibmatch/citation_parser.hpp"
#include "bibmatch/evaluate.hpp"
#include "bibmatch/ingest.hpp"
#include "bibmatch/log.hpp"
#include "bibmatch/sparql_store.hpp"

namespace fs = std::filesystem;
using namespace bibmatch;

namespace {

struct StoreOptions {
    std::string sparql_endpoint = "https://w3id.org/oc/meta/sparql";
    std::string fixture_file;
    double rate = 2.5;
    double burst = 10.0;
    int max_in_flight = 10;
};

void add_store_options(CLI::App* cmd, StoreOptions& opts) {
    cmd->add_option("--sparql-endpoint", opts.sparql_endpoint,
                    "SPARQL endpoint of the bibliographic store")
        ->envname("SPARQL_ENDPOINT")
        ->capture_default_str();
    cmd->add_option("--fixture-file", opts.fixture_file,
                    "Use an in-memory store loaded from this CSV/JSON fixture "
                    "instead of the SPARQL endpoint");
    cmd->add_option("--rate", opts.rate, "Outbound request rate (requests/second)")
        ->capture_default_str();
    cmd->add_option("--burst", opts.burst, "Rate limiter burst capacity")
        ->capture_default_str();
}

struct BuiltStore {
    std::unique_ptr<Store> store;
    std::unique_ptr<HttpGuard> guard; // set only for the SPARQL backend
    std::string description;
};

BuiltStore build_store(const StoreOptions& opts) {
    BuiltStore built;
    if (!opts.fixture_file.empty()) {
        built.store = std::make_unique<FixtureStore>(FixtureStore::from_file(opts.fixture_file));
        built.description = "fixture:" + opts.fixture_file;
        return built;
    }
    HttpGuardConfig guard_cfg;
    guard_cfg.rate = opts.rate;
    guard_cfg.burst = opts.burst;
    guard_cfg.max_in_flight = opts.max_in_flight;
    built.guard = std::make_unique<HttpGuard>(guard_cfg);
    SparqlStoreConfig store_cfg;
    store_cfg.endpoint_url = opts.sparql_endpoint;
    built.store = std::make_unique<SparqlStore>(store_cfg, *built.guard);
    built.description = "sparql:" + opts.sparql_endpoint;
    return built;
}

std::string sanitize_filename(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out.push_back(keep ? c : '_');
    }
    return out;
}

void print_metrics(const EvaluationCounts& counts) {
    auto line = [](const char* name, const std::optional<double>& value) {
        std::cout << name << ": ";
        if (value)
            std::cout << std::fixed << std::setprecision(4) << *value;
        else
            std::cout << "n/a";
        std::cout << "\n";
    };
    std::cout << "tp: " << counts.tp << "\nfp: " << counts.fp << "\nfn: " << counts.fn
              << "\ntn: " << counts.tn << "\n";
    line("precision", counts.precision);
    line("recall", counts.recall);
    line("f1", counts.f1);
    line("accuracy", counts.accuracy);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bibliographic reference matcher: maps references with partial metadata "
                 "onto records of a bibliographic knowledge base"};
    app.require_subcommand(1);

    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Enable debug logging");
    app.add_flag("-q,--quiet", quiet, "Log warnings and errors only");

    // ---- match ----
    auto* match_cmd = app.add_subcommand("match", "Match references from input files");
    match_cmd->fallthrough();
    std::string input_dir, input_file, output_dir = "out";
    std::string format_name = "auto";
    std::string checkpoint_file, parser_endpoint = "http://localhost:8070";
    bool stub_parser = false;
    BatchConfig batch_cfg;
    MatchConfig match_cfg;
    StoreOptions match_store_opts;
    match_cmd->add_option("--input-dir", input_dir, "Directory of .json/.xml input files");
    match_cmd->add_option("--input-file", input_file, "Single input file");
    match_cmd->add_option("--output-dir", output_dir, "Output directory")
        ->capture_default_str();
    match_cmd->add_option("--format", format_name, "Input format")
        ->check(CLI::IsMember({"auto", "crossref", "tei"}))
        ->capture_default_str();
    match_cmd->add_option("--batch-size", batch_cfg.batch_size, "Files per batch")
        ->capture_default_str();
    match_cmd
        ->add_option("--batch-pause", batch_cfg.batch_pause_seconds,
                     "Pause between batches (seconds)")
        ->capture_default_str();
    match_cmd
        ->add_option("--ref-concurrency", batch_cfg.ref_concurrency,
                     "References matched in parallel per file")
        ->capture_default_str();
    match_cmd->add_option("--checkpoint-file", checkpoint_file,
                          "Checkpoint path (default: <output-dir>/checkpoint.log)");
    match_cmd
        ->add_option("--error-threshold", batch_cfg.error_threshold,
                     "Consecutive server errors before a 5-minute pause")
        ->capture_default_str();
    match_cmd->add_option("--threshold", match_cfg.threshold, "Acceptance threshold (points)")
        ->capture_default_str();
    match_cmd
        ->add_option("--adaptive-fraction", match_cfg.adaptive_fraction,
                     "Accept best candidates at this fraction of the threshold")
        ->capture_default_str();
    match_cmd->add_option("--use-doi", match_cfg.use_doi, "Enable DOI-based query strategies")
        ->capture_default_str();
    match_cmd->add_option("--year-floor", match_cfg.year_floor, "Oldest plausible year")
        ->capture_default_str();
    match_cmd
        ->add_option("--candidate-limit", match_cfg.candidate_limit,
                     "Candidates retrieved per query tier")
        ->capture_default_str();
    match_cmd->add_option("--parser-endpoint", parser_endpoint, "Citation parser service URL")
        ->envname("PARSER_ENDPOINT")
        ->capture_default_str();
    match_cmd->add_flag("--stub-parser", stub_parser,
                        "Use the built-in offline citation parser");
    add_store_options(match_cmd, match_store_opts);

    // ---- fetch ----
    auto* fetch_cmd = app.add_subcommand("fetch", "Fetch Crossref works by DOI into JSON files");
    fetch_cmd->fallthrough();
    std::vector<std::string> fetch_dois;
    std::string doi_file, fetch_output_dir = "fetched";
    CrossrefConfig crossref_cfg;
    double fetch_rate = 2.5, fetch_burst = 10.0;
    fetch_cmd->add_option("--doi", fetch_dois, "DOI to fetch (repeatable)");
    fetch_cmd->add_option("--doi-file", doi_file, "File with one DOI per line");
    fetch_cmd->add_option("--output-dir", fetch_output_dir, "Output directory")
        ->capture_default_str();
    fetch_cmd->add_option("--crossref-base-url", crossref_cfg.base_url, "Works endpoint")
        ->envname("CROSSREF_BASE_URL")
        ->capture_default_str();
    fetch_cmd->add_option("--rate", fetch_rate, "Outbound request rate (requests/second)")
        ->capture_default_str();
    fetch_cmd->add_option("--burst", fetch_burst, "Rate limiter burst capacity")
        ->capture_default_str();

    // ---- evaluate ----
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluation against DOI ground truth");
    evaluate_cmd->fallthrough();
    evaluate_cmd->require_subcommand(1);

    auto* check_cmd = evaluate_cmd->add_subcommand(
        "check-doi", "Verify reference DOIs of Crossref JSON files against the store");
    check_cmd->fallthrough();
    std::string check_json_dir, check_output_dir = "check_doi";
    StoreOptions check_store_opts;
    check_cmd->add_option("--json-dir", check_json_dir, "Directory of Crossref JSON files")
        ->required();
    check_cmd->add_option("--output-dir", check_output_dir, "Output directory")
        ->capture_default_str();
    add_store_options(check_cmd, check_store_opts);

    auto* compare_cmd = evaluate_cmd->add_subcommand(
        "compare", "Missed/earned DOIs between check-doi results and matcher output");
    compare_cmd->fallthrough();
    std::string compare_results_dir, compare_matches_dir, compare_output_dir = "comparison";
    compare_cmd
        ->add_option("--doi-results-dir", compare_results_dir,
                     "Directory with *_doi_results.csv files")
        ->required();
    compare_cmd->add_option("--matches-dir", compare_matches_dir,
                            "Directory with *_matches.csv files")
        ->required();
    compare_cmd->add_option("--output-dir", compare_output_dir, "Output directory")
        ->capture_default_str();

    auto* metrics_cmd = evaluate_cmd->add_subcommand(
        "metrics", "Precision/recall/F1/accuracy from the POS/NEG/PRED DOI sets");
    metrics_cmd->fallthrough();
    std::string metrics_check_dir, metrics_matches_dir, metrics_output_dir = "metrics";
    metrics_cmd
        ->add_option("--check-doi-dir", metrics_check_dir, "Directory with check-doi outputs")
        ->required();
    metrics_cmd->add_option("--matches-dir", metrics_matches_dir,
                            "Directory with *_matches.csv files")
        ->required();
    metrics_cmd->add_option("--output-dir", metrics_output_dir, "Output directory")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (verbose) logging::set_level(logging::Level::Debug);
    if (quiet) logging::set_level(logging::Level::Warn);

    try {
        if (match_cmd->parsed()) {
            if (input_dir.empty() == input_file.empty()) {
                std::cerr << "match: exactly one of --input-dir / --input-file is required\n";
                return 2;
            }
            if (!input_dir.empty() && !fs::is_directory(input_dir)) {
                std::cerr << "match: no such directory: " << input_dir << "\n";
                return 2;
            }
            if (!input_file.empty() && !fs::is_regular_file(input_file)) {
                std::cerr << "match: no such file: " << input_file << "\n";
                return 2;
            }
            match_cfg.validate();
            BuiltStore built = build_store(match_store_opts);

            std::unique_ptr<CitationParser> parser;
            std::unique_ptr<HttpGuard> parser_guard; // separate rate budget
            if (stub_parser) {
                parser = std::make_unique<StubCitationParser>();
            } else if (!parser_endpoint.empty()) {
                parser_guard = std::make_unique<HttpGuard>();
                GrobidConfig grobid_cfg;
                grobid_cfg.base_url = parser_endpoint;
                parser = std::make_unique<GrobidClient>(grobid_cfg, *parser_guard);
            }

            batch_cfg.output_dir = output_dir;
            batch_cfg.checkpoint_file = checkpoint_file;
            batch_cfg.format = format_name == "crossref" ? InputFormat::Crossref
                               : format_name == "tei"    ? InputFormat::Tei
                                                         : InputFormat::Auto;
            batch_cfg.guard = built.guard.get();
            batch_cfg.report_params.threshold = match_cfg.threshold;
            batch_cfg.report_params.use_doi = match_cfg.use_doi;
            batch_cfg.report_params.candidate_limit = match_cfg.candidate_limit;
            batch_cfg.report_params.rate = match_store_opts.rate;
            batch_cfg.report_params.burst = match_store_opts.burst;
            batch_cfg.report_params.batch_size = batch_cfg.batch_size;
            batch_cfg.report_params.batch_pause_seconds = batch_cfg.batch_pause_seconds;
            batch_cfg.report_params.ref_concurrency = batch_cfg.ref_concurrency;
            batch_cfg.report_params.store_description = built.description;

            AggregateStats stats;
            if (!input_dir.empty()) {
                batch_cfg.input_dir = input_dir;
                stats = process_directory(batch_cfg, *built.store, parser.get(), match_cfg);
            } else {
                fs::path path(input_file);
                fs::create_directories(batch_cfg.output_dir);
                FileRunResult result =
                    process_file(path, batch_cfg.format, *built.store, parser.get(), match_cfg,
                                 batch_cfg.output_dir, batch_cfg.ref_concurrency);
                stats.total_files_attempted = 1;
                stats.references_total = result.references;
                stats.references_matched = result.matched;
                switch (result.outcome) {
                    case FileOutcome::Done: stats.files_processed = 1; break;
                    case FileOutcome::Empty: stats.empty_files = 1; break;
                    case FileOutcome::Error: stats.files_with_errors = 1; break;
                }
                for (const MatchOutcome& outcome : result.outcomes) {
                    if (outcome.grobid_attempted) {
                        ++stats.grobid_attempts;
                        if (outcome.status == MatchStatus::Matched) ++stats.grobid_successes;
                    }
                    if (outcome.status == MatchStatus::Matched && outcome.query_tier)
                        ++stats.matches_by_tier[*outcome.query_tier];
                }
                write_stats_txt(stats, batch_cfg.output_dir / "aggregate_statistics.txt");
                write_html_report(stats,
                                  {{result.base, result.outcome, result.references,
                                    result.matched}},
                                  batch_cfg.report_params, "single file run",
                                  batch_cfg.output_dir / "report.html");
            }
            std::cout << render_stats_txt(stats);
            return 0;
        }

        if (fetch_cmd->parsed()) {
            std::vector<std::string> dois = fetch_dois;
            if (!doi_file.empty()) {
                std::ifstream in(doi_file);
                if (!in) {
                    std::cerr << "fetch: cannot open " << doi_file << "\n";
                    return 2;
                }
                std::string line;
                while (std::getline(in, line))
                    if (!is_blank(line)) dois.push_back(trim(line));
            }
            if (dois.empty()) {
                std::cerr << "fetch: no DOIs given (use --doi or --doi-file)\n";
                return 2;
            }
            fs::create_directories(fetch_output_dir);
            HttpGuardConfig guard_cfg;
            guard_cfg.rate = fetch_rate;
            guard_cfg.burst = fetch_burst;
            HttpGuard guard(guard_cfg);
            UrlParts url = split_url(crossref_cfg.base_url);
            long written = 0;
            for (const std::string& doi : dois) {
                try {
                    HttpGuard::RequestOptions opts;
                    opts.pass_through_statuses = {404};
                    HttpResponse resp = guard.execute(
                        [&] { return http_get(url.origin, url.path + "/" + escape_path(doi)); },
                        opts);
                    if (resp.status == 404) {
                        logging::warn("fetch_not_found", {{"doi", doi}});
                        continue;
                    }
                    parse_crossref_work(resp.body); // reject non-works payloads early
                    fs::path out_path =
                        fs::path(fetch_output_dir) / (sanitize_filename(doi) + ".json");
                    write_file_atomic(out_path, resp.body);
                    logging::info("fetch_written", {{"doi", doi}, {"file", out_path.string()}});
                    ++written;
                } catch (const std::exception& e) {
                    logging::error("fetch_failed", {{"doi", doi}, {"reason", e.what()}});
                }
            }
            std::cout << written << " of " << dois.size() << " works written to "
                      << fetch_output_dir << "\n";
            return written > 0 ? 0 : 1;
        }

        if (check_cmd->parsed()) {
            BuiltStore built = build_store(check_store_opts);
            CheckDoiStats stats = check_doi(check_json_dir, *built.store, check_output_dir);
            std::cout << "files: " << stats.files << "\ntotal_queries: " << stats.total_queries
                      << "\nsuccessful_queries: " << stats.successful_queries << "\n";
            return 0;
        }
        if (compare_cmd->parsed()) {
            CompareTotals totals =
                compare(compare_results_dir, compare_matches_dir, compare_output_dir);
            std::cout << totals.missed << " missed, " << totals.earned << " earned\n";
            return 0;
        }
        if (metrics_cmd->parsed()) {
            EvaluationCounts counts =
                metrics(metrics_check_dir, metrics_matches_dir, metrics_output_dir);
            print_metrics(counts);
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
