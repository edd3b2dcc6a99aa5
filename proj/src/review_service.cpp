#include "revassist/review_service.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <utility>

#include "revassist/errors.hpp"
#include "revassist/text_util.hpp"

namespace revassist {

Clock system_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS patches (
    patch_id   TEXT PRIMARY KEY,
    approach   TEXT NOT NULL,
    created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS comments (
    id             INTEGER PRIMARY KEY AUTOINCREMENT,
    patch_id       TEXT NOT NULL REFERENCES patches(patch_id),
    com            TEXT NOT NULL,
    line           INTEGER NOT NULL,
    file           TEXT NOT NULL,
    created_at     INTEGER NOT NULL,
    opened_at      INTEGER,
    evaluated_at   INTEGER,
    decision       TEXT CHECK (decision IN ('accept', 'ignore')),
    reason         TEXT,
    published_text TEXT
);
CREATE INDEX IF NOT EXISTS comments_by_patch ON comments(patch_id);
)sql";

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail("prepare");
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind_null(int i) {
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }
    template <typename T>
    Statement& bind(int i, const std::optional<T>& v) {
        return v ? bind(i, *v) : bind_null(i);
    }

    // True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        fail("step");
    }

    std::string text(int col) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
    }
    std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::optional<std::int64_t> opt_int64(int col) const {
        return is_null(col) ? std::nullopt : std::optional<std::int64_t>(int64(col));
    }
    std::optional<std::string> opt_text(int col) const {
        return is_null(col) ? std::nullopt : std::optional<std::string>(text(col));
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) fail("bind");
    }
    [[noreturn]] void fail(const char* what) const {
        throw PersistenceError(std::string("sqlite ") + what + ": " + sqlite3_errmsg(db_));
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

// Rolls back unless committed.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { run("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        run("COMMIT");
        done_ = true;
    }

private:
    void run(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw PersistenceError(std::string(sql) + ": " + msg);
        }
    }

    sqlite3* db_;
    bool done_ = false;
};

std::optional<std::int64_t> parse_id(const std::string& id) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), v);
    if (ec != std::errc{} || ptr != id.data() + id.size() || v <= 0) return std::nullopt;
    return v;
}

}  // namespace

ReviewService::ReviewService(const std::filesystem::path& db_path, PublicationMode mode, CommentGenerator generator,
                             Clock clock)
    : mode_(mode), generator_(std::move(generator)), clock_(std::move(clock)) {
    open_db(db_path);
    load();
}

ReviewService::~ReviewService() {
    if (db_) sqlite3_close(db_);
}

void ReviewService::exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw PersistenceError(msg);
    }
}

void ReviewService::open_db(const std::filesystem::path& path) {
    if (sqlite3_open_v2(path.string().c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        if (db_) sqlite3_close(db_);
        db_ = nullptr;
        throw PersistenceError("cannot open " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec("PRAGMA foreign_keys=ON");
    exec(kSchema);
}

void ReviewService::load() {
    Statement patches(db_, "SELECT patch_id, approach FROM patches");
    while (patches.step()) patches_[patches.text(0)] = PatchEntry{patches.text(1), {}};

    Statement rows(db_,
                   "SELECT id, patch_id, com, line, file, created_at, opened_at, evaluated_at, decision, reason, "
                   "published_text FROM comments ORDER BY id");
    while (rows.step()) {
        StoredComment c;
        const auto id = rows.int64(0);
        c.id = std::to_string(id);
        c.patch_id = rows.text(1);
        c.com = rows.text(2);
        c.line = static_cast<int>(rows.int64(3));
        c.file = rows.text(4);
        c.created_at = rows.int64(5);
        c.opened_at = rows.opt_int64(6);
        c.evaluated_at = rows.opt_int64(7);
        if (const auto d = rows.opt_text(8)) {
            EvaluationDecision decision;
            decision.kind = *d == "accept" ? EvaluationDecision::Kind::Accept : EvaluationDecision::Kind::Ignore;
            if (const auto r = rows.opt_text(9)) decision.reason = parse_reason(*r);
            if (!decision.valid()) throw PersistenceError("stored decision for comment " + c.id + " is invalid");
            c.decision = decision;
        }
        c.published_text = rows.opt_text(10);
        auto it = patches_.find(c.patch_id);
        if (it == patches_.end()) throw PersistenceError("comment " + c.id + " belongs to an unknown patch");
        c.approach = it->second.approach;
        it->second.comment_ids.push_back(id);
        comments_.emplace(id, std::move(c));
    }
}

PatchReviewState ReviewService::state_locked(const std::string& patch_id) const {
    PatchReviewState s;
    s.patch_id = patch_id;
    const auto it = patches_.find(patch_id);
    if (it == patches_.end()) return s;
    s.generation_done = true;
    s.approach = it->second.approach;
    for (const auto id : it->second.comment_ids) s.comments.push_back(comments_.at(id));
    return s;
}

PatchReviewState ReviewService::state(const std::string& patch_id) const {
    std::shared_lock lock(mutex_);
    return state_locked(patch_id);
}

const StoredComment& ReviewService::find_locked(const std::string& comment_id) const {
    const auto id = parse_id(comment_id);
    const auto it = id ? comments_.find(*id) : comments_.end();
    if (it == comments_.end()) throw UnknownComment("unknown comment '" + comment_id + "'");
    return it->second;
}

StoredComment& ReviewService::find_locked(const std::string& comment_id) {
    return comments_.at(std::stoll(std::as_const(*this).find_locked(comment_id).id));
}

StoredComment ReviewService::comment(const std::string& comment_id) const {
    std::shared_lock lock(mutex_);
    return find_locked(comment_id);
}

std::size_t ReviewService::generator_runs() const { return generator_runs_.load(); }

PatchReviewState ReviewService::maybe_generate(const Patch& patch, Approach approach) {
    {
        std::shared_lock lock(mutex_);
        if (patches_.count(patch.id)) return state_locked(patch.id);
    }
    if (patch.status != PatchStatus::NeedsReview) {
        PatchReviewState empty;
        empty.patch_id = patch.id;
        return empty;
    }

    std::promise<PatchReviewState> promise;
    std::shared_future<PatchReviewState> future;
    bool leader = false;
    {
        std::lock_guard lock(inflight_mutex_);
        if (const auto it = inflight_.find(patch.id); it != inflight_.end()) {
            future = it->second;
        } else {
            // a run may have finished between the cache check and here
            std::shared_lock cache(mutex_);
            if (patches_.count(patch.id)) return state_locked(patch.id);
            future = promise.get_future().share();
            inflight_.emplace(patch.id, future);
            leader = true;
        }
    }
    if (!leader) return future.get();

    try {
        ++generator_runs_;
        const auto comments = generator_(patch, approach);
        promise.set_value(persist_generation(patch, approach, comments));
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(patch.id);
    }
    return future.get();
}

PatchReviewState ReviewService::persist_generation(const Patch& patch, Approach approach,
                                                   const std::vector<GeneratedComment>& comments) {
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    const std::string approach_text(approach_name(approach));
    std::vector<StoredComment> fresh;
    {
        Transaction tx(db_);
        Statement(db_, "INSERT INTO patches(patch_id, approach, created_at) VALUES (?, ?, ?)")
            .bind(1, patch.id)
            .bind(2, approach_text)
            .bind(3, now)
            .step();
        for (const auto& g : comments) {
            Statement(db_, "INSERT INTO comments(patch_id, com, line, file, created_at) VALUES (?, ?, ?, ?, ?)")
                .bind(1, patch.id)
                .bind(2, g.com)
                .bind(3, static_cast<std::int64_t>(g.line))
                .bind(4, g.file)
                .bind(5, now)
                .step();
            StoredComment c;
            c.id = std::to_string(sqlite3_last_insert_rowid(db_));
            c.patch_id = patch.id;
            c.approach = approach_text;
            c.com = g.com;
            c.line = g.line;
            c.file = g.file;
            c.created_at = now;
            fresh.push_back(std::move(c));
        }
        tx.commit();
    }
    auto& entry = patches_[patch.id];
    entry.approach = approach_text;
    for (auto& c : fresh) {
        const auto id = *parse_id(c.id);
        entry.comment_ids.push_back(id);
        comments_.emplace(id, std::move(c));
    }
    return state_locked(patch.id);
}

StoredComment ReviewService::mark_opened(const std::string& comment_id, Timestamp now) {
    std::unique_lock lock(mutex_);
    auto& c = find_locked(comment_id);
    if (c.opened_at || c.decision) return c;
    Statement stmt(db_, "UPDATE comments SET opened_at = ? WHERE id = ? AND opened_at IS NULL");
    stmt.bind(1, now).bind(2, *parse_id(comment_id)).step();
    c.opened_at = now;
    return c;
}

StoredComment ReviewService::evaluate(const std::string& comment_id, EvaluationDecision decision,
                                      const std::optional<std::string>& edited_text, Timestamp now) {
    std::unique_lock lock(mutex_);
    auto& c = find_locked(comment_id);
    if (!decision.valid()) {
        throw InvalidDecision(decision.kind == EvaluationDecision::Kind::Ignore ? "ignoring a comment needs a reason"
                                                                                : "an accepted comment takes no reason");
    }
    std::optional<std::string> published;
    if (decision.kind == EvaluationDecision::Kind::Accept) {
        if (edited_text && text::trim(*edited_text).empty()) throw InvalidDecision("the edited comment is empty");
        published = edited_text ? *edited_text : c.com;
    }
    if (c.decision) throw AlreadyEvaluated("comment " + comment_id + " was already evaluated");

    const auto evaluated_at = c.opened_at ? std::max(now, *c.opened_at) : now;
    const std::string kind = decision.kind == EvaluationDecision::Kind::Accept ? "accept" : "ignore";
    std::optional<std::string> reason;
    if (decision.reason) reason = std::string(reason_name(*decision.reason));

    Statement stmt(db_,
                   "UPDATE comments SET decision = ?, reason = ?, evaluated_at = ?, published_text = ? "
                   "WHERE id = ? AND decision IS NULL");
    stmt.bind(1, kind).bind(2, reason).bind(3, evaluated_at).bind(4, published).bind(5, *parse_id(comment_id)).step();
    if (sqlite3_changes(db_) != 1) throw AlreadyEvaluated("comment " + comment_id + " was already evaluated");

    c.decision = decision;
    c.evaluated_at = evaluated_at;
    c.published_text = published;
    return c;
}

std::vector<StoredComment> ReviewService::publishable(const std::string& patch_id) const {
    std::shared_lock lock(mutex_);
    const auto s = state_locked(patch_id);
    std::vector<StoredComment> out;
    const bool all_done = std::all_of(s.comments.begin(), s.comments.end(),
                                      [](const StoredComment& c) { return c.decision.has_value(); });
    if (mode_ == PublicationMode::Gated && !all_done) return out;
    std::copy_if(s.comments.begin(), s.comments.end(), std::back_inserter(out), [](const StoredComment& c) {
        return c.decision && c.decision->kind == EvaluationDecision::Kind::Accept;
    });
    return out;
}

PendingSummary ReviewService::pending_summary(const std::string& patch_id) const {
    std::shared_lock lock(mutex_);
    PendingSummary p;
    const auto it = patches_.find(patch_id);
    if (it == patches_.end()) return p;
    for (const auto id : it->second.comment_ids) {
        ++p.generated;
        if (!comments_.at(id).decision) ++p.unevaluated;
    }
    return p;
}

std::vector<StoredComment> ReviewService::export_log() const {
    std::shared_lock lock(mutex_);
    std::vector<StoredComment> out;
    out.reserve(comments_.size());
    for (const auto& [id, c] : comments_) out.push_back(c);
    return out;
}

}  // namespace revassist
