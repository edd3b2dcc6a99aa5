#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "revassist/evaluation.hpp"
#include "revassist/llm_pipeline.hpp"
#include "revassist/patch.hpp"

struct sqlite3;

namespace revassist {

enum class PublicationMode { Gated, Ungated };

struct PatchReviewState {
    std::string patch_id;
    std::vector<StoredComment> comments;  // ordered by id
    bool generation_done = false;
    std::string approach;

    bool operator==(const PatchReviewState&) const = default;
};

struct PendingSummary {
    int generated = 0;
    int unevaluated = 0;

    bool operator==(const PendingSummary&) const = default;
};

/// Produces the comments for a patch; normally a run_review call.
using CommentGenerator = std::function<std::vector<GeneratedComment>(const Patch&, Approach)>;

using Clock = std::function<Timestamp()>;
Clock system_clock_ms();

/// Generate-once comment cache with evaluate-once decisions, persisted in
/// SQLite. Every change is committed before the call returns.
///
/// Reads are served from an in-memory copy under a shared lock. Writes take
/// the exclusive lock, commit to the database, then update the copy.
/// Generation runs outside all locks and is single-flight per patch id.
class ReviewService {
public:
    /// `db_path` may be ":memory:". Throws PersistenceError.
    ReviewService(const std::filesystem::path& db_path, PublicationMode mode, CommentGenerator generator,
                  Clock clock = system_clock_ms());
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    /// Cached state when generation already happened (the approach argument
    /// is then ignored); an empty, not-generated state when the patch is not
    /// awaiting review; otherwise runs the generator once and persists its
    /// comments. A generator failure is rethrown to every waiting caller and
    /// leaves the patch not generated, so a later call retries.
    PatchReviewState maybe_generate(const Patch& patch, Approach approach);

    /// Current state; empty and not generated for an unknown patch.
    PatchReviewState state(const std::string& patch_id) const;

    StoredComment comment(const std::string& comment_id) const;

    /// Records the first open. Later opens, and opens after the comment was
    /// evaluated, change nothing. Throws UnknownComment.
    StoredComment mark_opened(const std::string& comment_id, Timestamp now);

    /// Records the decision once. evaluated_at is `now`, raised to opened_at
    /// if the clock went backwards. Throws UnknownComment, InvalidDecision
    /// (Ignore without reason, Accept with a reason, blank edit) and
    /// AlreadyEvaluated. An edit given with Ignore is discarded.
    StoredComment evaluate(const std::string& comment_id, EvaluationDecision decision,
                           const std::optional<std::string>& edited_text, Timestamp now);

    /// Accepted comments ready for publication under the configured mode.
    std::vector<StoredComment> publishable(const std::string& patch_id) const;

    PendingSummary pending_summary(const std::string& patch_id) const;

    /// Every stored comment ordered by id.
    std::vector<StoredComment> export_log() const;

    PublicationMode mode() const { return mode_; }
    Timestamp now() const { return clock_(); }

    /// Number of generator invocations so far.
    std::size_t generator_runs() const;

private:
    struct PatchEntry {
        std::string approach;
        std::vector<std::int64_t> comment_ids;
    };

    void open_db(const std::filesystem::path& path);
    void load();
    void exec(const char* sql);
    PatchReviewState state_locked(const std::string& patch_id) const;
    const StoredComment& find_locked(const std::string& comment_id) const;
    StoredComment& find_locked(const std::string& comment_id);
    PatchReviewState persist_generation(const Patch& patch, Approach approach,
                                        const std::vector<GeneratedComment>& comments);

    PublicationMode mode_;
    CommentGenerator generator_;
    Clock clock_;

    sqlite3* db_ = nullptr;
    mutable std::shared_mutex mutex_;
    std::map<std::string, PatchEntry> patches_;
    std::map<std::int64_t, StoredComment> comments_;  // keyed by rowid

    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<PatchReviewState>> inflight_;
    std::atomic<std::size_t> generator_runs_{0};
};

}  // namespace revassist
