#pragma once

// Resumable progress tracking for directory runs. The on-disk file is always
// a complete snapshot, replaced atomically (write to a temp file, rename):
// a snapshot every 10 completed files, a compaction every 10 batches.

#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bibmatch/errors.hpp"
#include "bibmatch/log.hpp"
#include "bibmatch/stats.hpp"
#include "bibmatch/text.hpp"

namespace bibmatch {

/// Writes `content` to `path` via a temp file + atomic rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

class Checkpoint {
public:
    static constexpr int kFilesPerSnapshot = 10;
    static constexpr int kBatchesPerCompaction = 10;

    /// Loads the existing snapshot when the file is present. A snapshot that
    /// cannot be parsed aborts the run rather than silently reprocessing.
    explicit Checkpoint(std::filesystem::path file) : file_(std::move(file)) {
        if (file_.empty() || !std::filesystem::exists(file_)) return;
        std::ifstream in(file_, std::ios::binary);
        if (!in) throw ParseError("checkpoint: cannot open " + file_.string());
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            Entry entry = parse_line(line, line_no);
            latest_[entry.path] = entry.outcome;
            history_.push_back(std::move(entry));
        }
    }

    /// True when the file completed in a previous run (done or empty) and
    /// must be skipped on resume. Errored files are retried.
    bool is_finished(const std::string& file_key) const {
        std::lock_guard<std::mutex> lock(mtx_);
        auto it = latest_.find(file_key);
        return it != latest_.end() &&
               (it->second == FileOutcome::Done || it->second == FileOutcome::Empty);
    }

    void record(const std::string& file_key, FileOutcome outcome) {
        std::lock_guard<std::mutex> lock(mtx_);
        Entry entry{outcome, std::time(nullptr), file_key};
        latest_[file_key] = outcome;
        history_.push_back(std::move(entry));
        if (++files_since_snapshot_ >= kFilesPerSnapshot) snapshot_locked();
    }

    /// Called after each batch; periodically compacts the history down to
    /// one entry per file so the snapshot cannot grow without bound.
    void end_batch() {
        std::lock_guard<std::mutex> lock(mtx_);
        if (++batches_since_compaction_ < kBatchesPerCompaction) return;
        batches_since_compaction_ = 0;
        compact_locked();
        snapshot_locked();
    }

    void flush() {
        std::lock_guard<std::mutex> lock(mtx_);
        if (files_since_snapshot_ > 0) snapshot_locked();
    }

    int snapshots_written() const {
        std::lock_guard<std::mutex> lock(mtx_);
        return snapshots_written_;
    }

    size_t finished_count() const {
        std::lock_guard<std::mutex> lock(mtx_);
        size_t n = 0;
        for (const auto& [path, outcome] : latest_)
            if (outcome == FileOutcome::Done || outcome == FileOutcome::Empty) ++n;
        return n;
    }

private:
    struct Entry {
        FileOutcome outcome;
        std::time_t timestamp;
        std::string path;
    };

    static Entry parse_line(const std::string& line, size_t line_no) {
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw ParseError("checkpoint: malformed line " + std::to_string(line_no));
        Entry entry;
        std::string word = line.substr(0, t1);
        if (word == "done") entry.outcome = FileOutcome::Done;
        else if (word == "empty") entry.outcome = FileOutcome::Empty;
        else if (word == "error") entry.outcome = FileOutcome::Error;
        else throw ParseError("checkpoint: unknown outcome `" + word + "` at line " +
                              std::to_string(line_no));
        entry.timestamp = static_cast<std::time_t>(std::stoll(line.substr(t1 + 1, t2 - t1 - 1)));
        entry.path = line.substr(t2 + 1);
        return entry;
    }

    void snapshot_locked() {
        if (file_.empty()) return;
        std::ostringstream out;
        for (const Entry& entry : history_)
            out << file_outcome_label(entry.outcome) << '\t' << entry.timestamp << '\t'
                << entry.path << '\n';
        write_file_atomic(file_, out.str());
        files_since_snapshot_ = 0;
        ++snapshots_written_;
        logging::debug("checkpoint_write", {{"file", file_.string()},
                                            {"entries", std::to_string(history_.size())}});
    }

    void compact_locked() {
        std::vector<Entry> compacted;
        compacted.reserve(latest_.size());
        std::unordered_map<std::string, bool> kept;
        for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
            if (kept.emplace(it->path, true).second) compacted.push_back(*it);
        }
        std::reverse(compacted.begin(), compacted.end());
        history_ = std::move(compacted);
        logging::debug("checkpoint_compact", {{"entries", std::to_string(history_.size())}});
    }

    std::filesystem::path file_;
    mutable std::mutex mtx_;
    std::unordered_map<std::string, FileOutcome> latest_;
    std::vector<Entry> history_;
    int files_since_snapshot_ = 0;
    int batches_since_compaction_ = 0;
    int snapshots_written_ = 0;
};

} // namespace bibmatch
