#include <doctest.h>

#include <set>

#include "bibmatch/batch.hpp"
#include "bibmatch/csv.hpp"
#include "support/test_util.hpp"

using namespace bibmatch;
using test_support::FakeClock;
using test_support::InstrumentedStore;
using test_support::TempDir;

namespace {

/// Crossref JSON file whose references resolve to fixture records
/// [first, first+count).
std::string citing_file_json(int first, int count) {
    std::string refs;
    for (int i = first; i < first + count; ++i) {
        if (!refs.empty()) refs += ",";
        Candidate rec = test_support::make_record(i);
        refs += "{\"key\": \"ref" + std::to_string(i) + "\"";
        refs += ",\"DOI\": \"" + rec.doi + "\"";
        refs += ",\"article-title\": \"" + rec.title + "\"";
        refs += ",\"author\": \"" + rec.first_author_surname + "\"";
        refs += ",\"year\": \"" + std::to_string(*rec.year) + "\"";
        refs += ",\"volume\": \"" + rec.volume + "\"";
        refs += ",\"first-page\": \"" + rec.first_page + "\"}";
    }
    return R"({"message": {"reference-count": )" + std::to_string(count) +
           R"(, "reference": [)" + refs + "]}}";
}

std::string empty_file_json() {
    return R"({"message": {"reference-count": 0}})";
}

BatchConfig quick_config(const TempDir& in, const TempDir& out, FakeClock* clock) {
    BatchConfig cfg;
    cfg.input_dir = in.path();
    cfg.output_dir = out.path();
    cfg.batch_pause_seconds = 0;
    cfg.clock = clock;
    cfg.report_timestamp = "fixed";
    return cfg;
}

} // namespace

TEST_CASE("process_file writes matched and unmatched rows partitioning the references") {
    TempDir in("pf_in"), out("pf_out");
    // Records 0..2 exist in the store; reference 90 does not.
    std::string json = citing_file_json(0, 3);
    json.insert(json.find("[") + 1,
                R"({"key": "miss", "article-title": "not in store", "author": "Nope"},)");
    test_support::write_file(in / "work1.json", json);

    FixtureStore store = test_support::make_fixture_store(10);
    MatchConfig cfg;
    cfg.current_year = 2025;
    FileRunResult result = process_file(in / "work1.json", InputFormat::Auto, store, nullptr,
                                        cfg, out.path(), 4);
    CHECK(result.outcome == FileOutcome::Done);
    CHECK(result.references == 4);
    CHECK(result.matched == 3);

    csv::Table matched = csv::Table::from_file((out / "work1_matches.csv").string());
    csv::Table unmatched = csv::Table::from_file((out / "work1_unmatched.csv").string());
    CHECK(matched.size() == 3);
    CHECK(unmatched.size() == 1);
    CHECK(matched.size() + unmatched.size() == 4); // partition property
    CHECK(unmatched.cell(0, "ref_key") == "miss");
    CHECK(unmatched.cell(0, "failure_type") == "complete");
    // Source order preserved in the matched rows.
    CHECK(matched.cell(0, "ref_key") == "ref0");
    CHECK(matched.cell(2, "ref_key") == "ref2");
    CHECK(matched.cell(0, "query_tier") == "Q1-YEAR&DOI");
}

TEST_CASE("zero-reference files are empty outcomes with header-only outputs") {
    TempDir in("empty_in"), out("empty_out");
    test_support::write_file(in / "empty.json", empty_file_json());
    FixtureStore store;
    MatchConfig cfg;
    FileRunResult result =
        process_file(in / "empty.json", InputFormat::Auto, store, nullptr, cfg, out.path(), 4);
    CHECK(result.outcome == FileOutcome::Empty);
    CHECK(result.references == 0);
    CHECK(test_support::read_file(out / "empty_matches.csv") ==
          csv::make_row(matched_csv_header()));
    CHECK(test_support::read_file(out / "empty_unmatched.csv") ==
          csv::make_row(unmatched_csv_header()));
}

TEST_CASE("process_directory aggregates stats with empty-file accounting") {
    TempDir in("dir_in"), out("dir_out");
    for (int f = 0; f < 7; ++f)
        test_support::write_file(in / ("work" + std::to_string(f) + ".json"),
                                 citing_file_json(f * 2, 2));
    for (int f = 0; f < 2; ++f)
        test_support::write_file(in / ("zero" + std::to_string(f) + ".json"),
                                 empty_file_json());

    FixtureStore store = test_support::make_fixture_store(50);
    FakeClock clock;
    BatchConfig batch_cfg = quick_config(in, out, &clock);
    MatchConfig cfg;
    cfg.current_year = 2025;
    AggregateStats stats = process_directory(batch_cfg, store, nullptr, cfg);

    CHECK(stats.total_files_attempted == 9);
    CHECK(stats.files_processed == 7);
    CHECK(stats.empty_files == 2);
    CHECK(stats.files_with_errors == 0);
    CHECK(stats.references_total == 14);
    CHECK(stats.references_matched == 14);
    long by_tier = 0;
    for (const auto& [tier, count] : stats.matches_by_tier) by_tier += count;
    CHECK(by_tier == stats.references_matched);
    CHECK(stats.total_files_attempted ==
          stats.files_processed + stats.empty_files + stats.files_with_errors);

    CHECK(std::filesystem::exists(out / "aggregate_statistics.txt"));
    CHECK(std::filesystem::exists(out / "report.html"));
    CHECK(std::filesystem::exists(out / "checkpoint.log"));
}

TEST_CASE("per-file errors are recorded without aborting the run") {
    TempDir in("err_in"), out("err_out");
    test_support::write_file(in / "good.json", citing_file_json(0, 1));
    test_support::write_file(in / "broken.json", "{this is not json");
    FixtureStore store = test_support::make_fixture_store(5);
    FakeClock clock;
    BatchConfig batch_cfg = quick_config(in, out, &clock);
    MatchConfig cfg;
    cfg.current_year = 2025;
    AggregateStats stats = process_directory(batch_cfg, store, nullptr, cfg);
    CHECK(stats.files_processed == 1);
    CHECK(stats.files_with_errors == 1);
    CHECK(stats.total_files_attempted == 2);
}

TEST_CASE("inter-batch pauses respect the configured duration") {
    TempDir in("pause_in"), out("pause_out");
    for (int f = 0; f < 7; ++f)
        test_support::write_file(in / ("w" + std::to_string(f) + ".json"), empty_file_json());
    FixtureStore store;
    FakeClock clock;
    BatchConfig batch_cfg = quick_config(in, out, &clock);
    batch_cfg.batch_size = 3;
    batch_cfg.batch_pause_seconds = 10;
    MatchConfig cfg;
    process_directory(batch_cfg, store, nullptr, cfg);

    // 7 files in batches of 3 -> 3 batches -> 2 pauses of >= 10 s.
    auto sleeps = clock.sleeps();
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0] >= 10.0);
    CHECK(sleeps[1] >= 10.0);
}

TEST_CASE("reference matching parallelism is bounded per file") {
    TempDir in("par_in"), out("par_out");
    test_support::write_file(in / "big.json", citing_file_json(0, 30));
    FixtureStore fixture = test_support::make_fixture_store(40);
    InstrumentedStore store(fixture);
    MatchConfig cfg;
    cfg.current_year = 2025;
    FileRunResult result =
        process_file(in / "big.json", InputFormat::Auto, store, nullptr, cfg, out.path(), 10);
    CHECK(result.matched == 30);
    CHECK(store.max_concurrent() <= 10);
}

TEST_CASE("checkpoint snapshots happen every 10 completed files") {
    TempDir in("cp_in"), out("cp_out");
    for (int f = 0; f < 25; ++f)
        test_support::write_file(in / ("w" + std::to_string(10 + f) + ".json"),
                                 empty_file_json());
    FixtureStore store;
    FakeClock clock;

    Checkpoint probe(out / "checkpoint.log");
    CHECK(probe.snapshots_written() == 0);

    BatchConfig batch_cfg = quick_config(in, out, &clock);
    batch_cfg.batch_size = 5;
    MatchConfig cfg;
    process_directory(batch_cfg, store, nullptr, cfg);

    // Snapshots at files 10 and 20, plus the final flush for the tail of 5.
    Checkpoint reloaded(out / "checkpoint.log");
    CHECK(reloaded.finished_count() == 25);
}

TEST_CASE("files finished in a previous run are skipped on resume") {
    TempDir in("resume_in"), out("resume_out");
    for (int f = 0; f < 6; ++f)
        test_support::write_file(in / ("w" + std::to_string(f) + ".json"),
                                 citing_file_json(f, 1));
    FixtureStore store = test_support::make_fixture_store(10);
    FakeClock clock;
    BatchConfig batch_cfg = quick_config(in, out, &clock);
    MatchConfig cfg;
    cfg.current_year = 2025;

    AggregateStats first = process_directory(batch_cfg, store, nullptr, cfg);
    CHECK(first.total_files_attempted == 6);

    AggregateStats second = process_directory(batch_cfg, store, nullptr, cfg);
    CHECK(second.total_files_attempted == 0); // everything checkpointed

    // Corrupt one output and drop its checkpoint entry: only that file reruns.
    std::filesystem::remove(out / "w3_matches.csv");
    std::string checkpoint = test_support::read_file(out / "checkpoint.log");
    std::string filtered;
    for (const std::string& line : [&] {
             std::vector<std::string> lines;
             std::istringstream ss(checkpoint);
             std::string l;
             while (std::getline(ss, l)) lines.push_back(l);
             return lines;
         }()) {
        if (line.find("w3.json") == std::string::npos) filtered += line + "\n";
    }
    test_support::write_file(out / "checkpoint.log", filtered);

    AggregateStats third = process_directory(batch_cfg, store, nullptr, cfg);
    CHECK(third.total_files_attempted == 1);
    CHECK(std::filesystem::exists(out / "w3_matches.csv"));
}

TEST_CASE("consecutive server errors trigger the long pause and a counter reset") {
    TempDir in("guardpause_in"), out("guardpause_out");
    for (int f = 0; f < 4; ++f)
        test_support::write_file(in / ("w" + std::to_string(f) + ".json"), empty_file_json());

    FakeClock clock;
    HttpGuardConfig guard_cfg;
    guard_cfg.rate = 1000;
    guard_cfg.burst = 1000;
    HttpGuard guard(guard_cfg, &clock, [] { return 0.0; });
    // Drive the shared counter to the threshold with failing requests.
    for (int i = 0; i < 10; ++i) {
        try {
            guard.execute([] { return HttpResponse{500, ""}; });
        } catch (const ServerError&) {
        }
    }
    CHECK(guard.consecutive_server_errors() == 10);

    FixtureStore store;
    BatchConfig batch_cfg = quick_config(in, out, &clock);
    batch_cfg.batch_size = 2;
    batch_cfg.guard = &guard;
    MatchConfig cfg;
    process_directory(batch_cfg, store, nullptr, cfg);

    auto sleeps = clock.sleeps();
    bool saw_long_pause = false;
    for (double s : sleeps) saw_long_pause = saw_long_pause || s >= 300.0;
    CHECK(saw_long_pause);
    CHECK(guard.consecutive_server_errors() == 0);
}

TEST_CASE("checkpoint snapshot cadence is every 10 recorded files") {
    TempDir dir("cadence");
    Checkpoint checkpoint(dir / "cp.log");
    for (int i = 0; i < 9; ++i) checkpoint.record("f" + std::to_string(i), FileOutcome::Done);
    CHECK(checkpoint.snapshots_written() == 0);
    checkpoint.record("f9", FileOutcome::Done);
    CHECK(checkpoint.snapshots_written() == 1);
    for (int i = 10; i < 20; ++i) checkpoint.record("f" + std::to_string(i), FileOutcome::Done);
    CHECK(checkpoint.snapshots_written() == 2);
    checkpoint.record("f20", FileOutcome::Done);
    checkpoint.flush(); // tail of 1 dirty file
    CHECK(checkpoint.snapshots_written() == 3);
    checkpoint.flush(); // nothing dirty, no extra write
    CHECK(checkpoint.snapshots_written() == 3);
}

TEST_CASE("checkpoint compaction keeps one line per file") {
    TempDir dir("compact");
    Checkpoint checkpoint(dir / "cp.log");
    // The same path recorded many times across many batches grows history,
    // then compaction collapses it.
    for (int batch = 0; batch < 10; ++batch) {
        checkpoint.record("file_a", FileOutcome::Error);
        checkpoint.end_batch();
    }
    std::string text = test_support::read_file(dir / "cp.log");
    size_t lines = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
    CHECK(lines == 1); // ten error entries collapsed by the 10th-batch compaction

    checkpoint.record("file_a", FileOutcome::Done);
    checkpoint.flush();
    Checkpoint reloaded(dir / "cp.log");
    CHECK(reloaded.is_finished("file_a")); // the latest outcome wins
}

TEST_CASE("checkpoint parses and rejects snapshots") {
    TempDir dir("cpparse");
    test_support::write_file(dir / "cp.log", "done\t170000\t/x/a.json\nempty\t170001\t/x/b.json\n");
    Checkpoint checkpoint(dir / "cp.log");
    CHECK(checkpoint.is_finished("/x/a.json"));
    CHECK(checkpoint.is_finished("/x/b.json"));
    CHECK_FALSE(checkpoint.is_finished("/x/c.json"));

    test_support::write_file(dir / "bad.log", "done only\n");
    CHECK_THROWS_AS(Checkpoint(dir / "bad.log"), ParseError);
}

TEST_CASE("match_references propagates store failures") {
    struct ThrowingStore : Store {
        StoreQueryResult retrieve_candidates(const Reference&, QueryTier, int, bool) override {
            throw ServerError("endpoint gone", {});
        }
        std::optional<Candidate> doi_exists(const std::string&) override { return {}; }
    } store;
    std::vector<Reference> refs{test_support::make_reference(0),
                                test_support::make_reference(1)};
    MatchConfig cfg;
    CHECK_THROWS_AS(match_references(refs, store, nullptr, cfg, 2), ServerError);
}
