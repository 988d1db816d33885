#pragma once

// Aggregate counters for a directory run, shared by the batch runner and the
// report writers.

#include <map>
#include <string>

#include "bibmatch/store.hpp"

namespace bibmatch {

struct AggregateStats {
    long total_files_attempted = 0; // processed + empty + errored this run
    long files_processed = 0;       // files with >= 1 reference that completed
    long empty_files = 0;           // source files with 0 references
    long files_with_errors = 0;

    long references_total = 0;
    long references_matched = 0;
    std::map<QueryTier, long> matches_by_tier;

    long grobid_attempts = 0;
    long grobid_successes = 0; // enrichment attempted and the reference matched

    double match_rate() const {
        return references_total > 0
                   ? static_cast<double>(references_matched) / static_cast<double>(references_total)
                   : 0.0;
    }
};

enum class FileOutcome { Done, Empty, Error };

inline const char* file_outcome_label(FileOutcome outcome) {
    switch (outcome) {
        case FileOutcome::Done: return "done";
        case FileOutcome::Empty: return "empty";
        case FileOutcome::Error: return "error";
    }
    return "?";
}

struct PerFileSummary {
    std::string base; // input filename without extension
    FileOutcome outcome = FileOutcome::Done;
    long references = 0;
    long matched = 0;
};

} // namespace bibmatch
