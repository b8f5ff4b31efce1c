#include "algosearch/store/state_store.hpp"

#include "algosearch/error.hpp"

#include <sqlite3.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cmath>
#include <mutex>
#include <sstream>

namespace algosearch {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS metric_definitions (
    name          TEXT PRIMARY KEY,
    direction     TEXT NOT NULL CHECK (direction IN ('maximize', 'minimize')),
    description   TEXT NOT NULL DEFAULT '',
    target_value  REAL,
    is_primary    INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS rounds (
    round_index           INTEGER PRIMARY KEY CHECK (round_index >= 0),
    action                TEXT NOT NULL,
    status                TEXT NOT NULL,
    summary               TEXT NOT NULL DEFAULT '',
    winning_candidate_id  INTEGER
);
CREATE TABLE IF NOT EXISTS candidates (
    candidate_id           INTEGER PRIMARY KEY,
    round_index            INTEGER NOT NULL REFERENCES rounds(round_index),
    action                 TEXT NOT NULL,
    description            TEXT NOT NULL DEFAULT '',
    artifact_path          TEXT NOT NULL,
    candidate_root         TEXT NOT NULL DEFAULT '',
    lineage_id             INTEGER NOT NULL,
    parent_ids             TEXT NOT NULL DEFAULT '[]',
    settings               TEXT NOT NULL DEFAULT '{}',
    analysis               TEXT NOT NULL DEFAULT '',
    suggested_next_action  TEXT,
    notes                  TEXT NOT NULL DEFAULT ''
);
CREATE INDEX IF NOT EXISTS candidates_by_round ON candidates(round_index);
CREATE INDEX IF NOT EXISTS candidates_by_lineage ON candidates(lineage_id);
CREATE TABLE IF NOT EXISTS metrics (
    candidate_id  INTEGER NOT NULL REFERENCES candidates(candidate_id),
    metric_name   TEXT NOT NULL REFERENCES metric_definitions(name),
    value         REAL NOT NULL,
    PRIMARY KEY (candidate_id, metric_name)
);
CREATE TABLE IF NOT EXISTS holdout_test_metrics (
    candidate_id  INTEGER PRIMARY KEY REFERENCES candidates(candidate_id),
    value         REAL,
    failure_note  TEXT NOT NULL DEFAULT '',
    remarks       TEXT NOT NULL DEFAULT '',
    CHECK ((value IS NULL) = (failure_note <> ''))
);
CREATE TABLE IF NOT EXISTS session_state (
    id                   INTEGER PRIMARY KEY CHECK (id = 1),
    phase                TEXT NOT NULL,
    run_status           TEXT NOT NULL,
    active_round         INTEGER,
    active_action        TEXT,
    preparation_summary  TEXT NOT NULL DEFAULT '',
    stop_reason          TEXT
);
CREATE TABLE IF NOT EXISTS candidate_failures (
    failure_id         INTEGER PRIMARY KEY,
    round_index        INTEGER NOT NULL,
    failing_code_path  TEXT NOT NULL DEFAULT '',
    parent_ids         TEXT NOT NULL DEFAULT '[]',
    error_message      TEXT NOT NULL CHECK (error_message <> ''),
    settings           TEXT NOT NULL DEFAULT '{}',
    metadata           TEXT NOT NULL DEFAULT '{}'
);
INSERT OR IGNORE INTO session_state (id, phase, run_status) VALUES (1, 'preparation', 'active');
)sql";

Errc classify(int rc)
{
    const int primary = rc & 0xff;
    return (primary == SQLITE_NOTADB || primary == SQLITE_CORRUPT) ? Errc::corrupt : Errc::storage;
}

[[noreturn]] void raise(sqlite3* db, int rc, const std::string& context)
{
    std::string msg = context + ": " + (db != nullptr ? sqlite3_errmsg(db) : sqlite3_errstr(rc));
    throw Error(classify(rc), msg);
}

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db)
    {
        const int rc = sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr);
        if (rc != SQLITE_OK) {
            raise(db, rc, "prepare failed");
        }
    }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;
    ~Statement() { sqlite3_finalize(stmt_); }

    Statement& bind(int idx, std::int64_t v)
    {
        check(sqlite3_bind_int64(stmt_, idx, v));
        return *this;
    }
    Statement& bind(int idx, int v) { return bind(idx, static_cast<std::int64_t>(v)); }
    Statement& bind(int idx, double v)
    {
        check(sqlite3_bind_double(stmt_, idx, v));
        return *this;
    }
    Statement& bind(int idx, const std::string& v)
    {
        check(sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int idx, std::string_view v) { return bind(idx, std::string(v)); }
    Statement& bind(int idx, const char* v) { return bind(idx, std::string(v)); }
    Statement& bind_null(int idx)
    {
        check(sqlite3_bind_null(stmt_, idx));
        return *this;
    }
    template <typename T>
    Statement& bind(int idx, const std::optional<T>& v)
    {
        return v ? bind(idx, *v) : bind_null(idx);
    }

    // True when a row is available.
    bool step()
    {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) {
            return true;
        }
        if (rc == SQLITE_DONE) {
            return false;
        }
        raise(db_, rc, "statement failed");
    }

    void run()
    {
        while (step()) {
        }
    }

    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
    int i32(int col) const { return sqlite3_column_int(stmt_, col); }
    double f64(int col) const { return sqlite3_column_double(stmt_, col); }
    std::string text(int col) const
    {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p == nullptr ? std::string() : std::string(reinterpret_cast<const char*>(p),
                                                          static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
    }
    std::optional<double> opt_f64(int col) const { return is_null(col) ? std::nullopt : std::optional(f64(col)); }
    std::optional<std::int64_t> opt_i64(int col) const { return is_null(col) ? std::nullopt : std::optional(i64(col)); }
    std::optional<std::string> opt_text(int col) const { return is_null(col) ? std::nullopt : std::optional(text(col)); }

private:
    void check(int rc)
    {
        if (rc != SQLITE_OK) {
            raise(db_, rc, "bind failed");
        }
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql)
{
    char* err = nullptr;
    const int rc = sqlite3_exec(db, sql, nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err != nullptr ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        throw Error(classify(rc), std::string("sql failed: ") + msg);
    }
}

// Rolls back unless committed.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;
    ~Transaction()
    {
        if (!done_) {
            sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        }
    }
    void commit()
    {
        exec(db_, "COMMIT");
        done_ = true;
    }

private:
    sqlite3* db_;
    bool done_ = false;
};

std::string ids_to_json(const std::vector<CandidateId>& ids)
{
    return Json(ids).dump();
}

std::vector<CandidateId> ids_from_json(const std::string& text)
{
    if (text.empty()) {
        return {};
    }
    return Json::parse(text).get<std::vector<CandidateId>>();
}

Json json_from_text(const std::string& text)
{
    if (text.empty()) {
        return Json::object();
    }
    return Json::parse(text);
}

bool directory_writable(const fs::path& dir)
{
    struct stat st {};
    if (::stat(dir.c_str(), &st) != 0 || !S_ISDIR(st.st_mode)) {
        return false;
    }
    // No write bit at all counts as read-only even for privileged users.
    if ((st.st_mode & (S_IWUSR | S_IWGRP | S_IWOTH)) == 0) {
        return false;
    }
    return ::access(dir.c_str(), W_OK) == 0;
}

constexpr const char* kCandidateColumns =
    "candidate_id, round_index, action, description, artifact_path, candidate_root, lineage_id, "
    "parent_ids, settings, analysis, suggested_next_action, notes";

CandidateRecord read_candidate(const Statement& st)
{
    CandidateRecord c;
    c.candidate_id = st.i64(0);
    c.round_index = st.i32(1);
    c.action = parse_action(st.text(2));
    c.description = st.text(3);
    c.artifact_path = st.text(4);
    c.candidate_root = st.text(5);
    c.lineage_id = st.i64(6);
    c.parent_ids = ids_from_json(st.text(7));
    c.settings = json_from_text(st.text(8));
    c.analysis = st.text(9);
    if (auto s = st.opt_text(10)) {
        c.suggested_next_action = parse_action(*s);
    }
    c.notes = st.text(11);
    return c;
}

} // namespace

struct Store::Impl {
    sqlite3* db = nullptr;
    fs::path db_path;
    fs::path artifact_root;
    mutable std::mutex mu;

    ~Impl()
    {
        if (db != nullptr) {
            sqlite3_close(db);
        }
    }

    std::optional<MetricDefinition> primary() const
    {
        Statement st(db, "SELECT name, direction, description, target_value, is_primary "
                         "FROM metric_definitions WHERE is_primary = 1");
        if (!st.step()) {
            return std::nullopt;
        }
        return MetricDefinition{st.text(0), parse_direction(st.text(1)), st.text(2), st.opt_f64(3), true};
    }

    std::vector<std::string> metric_names() const
    {
        std::vector<std::string> names;
        Statement st(db, "SELECT name FROM metric_definitions ORDER BY name");
        while (st.step()) {
            names.push_back(st.text(0));
        }
        return names;
    }

    bool metric_defined(const std::string& name) const
    {
        Statement st(db, "SELECT 1 FROM metric_definitions WHERE name = ?");
        st.bind(1, name);
        return st.step();
    }

    std::optional<RoundRecord> round(int idx) const
    {
        Statement st(db, "SELECT round_index, action, status, summary, winning_candidate_id "
                         "FROM rounds WHERE round_index = ?");
        st.bind(1, idx);
        if (!st.step()) {
            return std::nullopt;
        }
        return RoundRecord{st.i32(0), parse_action(st.text(1)), parse_round_status(st.text(2)), st.text(3),
                           st.opt_i64(4)};
    }

    std::optional<CandidateRecord> candidate(CandidateId id) const
    {
        const std::string sql = std::string("SELECT ") + kCandidateColumns + " FROM candidates WHERE candidate_id = ?";
        Statement st(db, sql.c_str());
        st.bind(1, id);
        if (!st.step()) {
            return std::nullopt;
        }
        return read_candidate(st);
    }

    int next_round_index() const
    {
        Statement st(db, "SELECT COALESCE(MAX(round_index) + 1, 0) FROM rounds");
        st.step();
        return st.i32(0);
    }

    std::string undefined_metric_message(const std::string& name) const
    {
        std::string msg = "metric '" + name + "' is not defined; defined metrics:";
        const auto names = metric_names();
        if (names.empty()) {
            msg += " (none)";
        }
        for (const auto& n : names) {
            msg += " " + n;
        }
        return msg;
    }

    // Sets the round's winner to the argbest of its candidates under the
    // primary metric (ties to the lower id).
    void refresh_winner(int round_index)
    {
        const auto prim = primary();
        std::optional<CandidateId> winner;
        if (prim) {
            const std::string sql = std::string(
                "SELECT c.candidate_id FROM candidates c JOIN metrics m ON m.candidate_id = c.candidate_id "
                "WHERE c.round_index = ? AND m.metric_name = ? ORDER BY m.value ") +
                (prim->direction == Direction::minimize ? "ASC" : "DESC") + ", c.candidate_id ASC LIMIT 1";
            Statement st(db, sql.c_str());
            st.bind(1, round_index).bind(2, prim->name);
            if (st.step()) {
                winner = st.i64(0);
            }
        }
        Statement up(db, "UPDATE rounds SET winning_candidate_id = ? WHERE round_index = ?");
        up.bind(1, winner).bind(2, round_index);
        up.run();
    }

    void refresh_all_winners()
    {
        std::vector<int> idx;
        Statement st(db, "SELECT round_index FROM rounds");
        while (st.step()) {
            idx.push_back(st.i32(0));
        }
        for (const int r : idx) {
            refresh_winner(r);
        }
    }

    SessionState session() const
    {
        Statement st(db, "SELECT phase, run_status, active_round, active_action, preparation_summary, stop_reason "
                         "FROM session_state WHERE id = 1");
        if (!st.step()) {
            throw Error(Errc::corrupt, "session_state row is missing");
        }
        SessionState s;
        s.phase = parse_phase(st.text(0));
        s.run_status = parse_run_status(st.text(1));
        if (auto r = st.opt_i64(2)) {
            s.active_round = static_cast<int>(*r);
        }
        if (auto a = st.opt_text(3)) {
            s.active_action = parse_action(*a);
        }
        s.preparation_summary = st.text(4);
        s.stop_reason = st.opt_text(5);
        return s;
    }

    void require_running_round(int round_index) const
    {
        const auto r = round(round_index);
        if (!r) {
            throw Error(Errc::rejected, "round " + std::to_string(round_index) + " does not exist");
        }
        if (r->status != RoundStatus::running) {
            throw Error(Errc::rejected, "round " + std::to_string(round_index) + " is not active (status " +
                                            std::string(to_string(r->status)) + ")");
        }
    }
};

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

Store Store::open_or_create(const fs::path& db_path, const fs::path& artifact_root)
{
    const fs::path abs = fs::absolute(db_path);
    const fs::path parent = abs.parent_path();
    if (!fs::is_directory(parent)) {
        throw Error(Errc::storage, "parent directory of " + abs.string() + " does not exist");
    }
    const bool existed = fs::exists(abs);
    if (!existed && !directory_writable(parent)) {
        throw Error(Errc::storage, "directory " + parent.string() + " is not writable");
    }

    auto impl = std::make_unique<Impl>();
    impl->db_path = abs;
    impl->artifact_root = artifact_root.empty() ? parent : fs::absolute(artifact_root);
    const int rc = sqlite3_open_v2(abs.c_str(), &impl->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
    if (rc != SQLITE_OK) {
        raise(impl->db, rc, "cannot open " + abs.string());
    }
    sqlite3_busy_timeout(impl->db, 5000);

    int version = 0;
    {
        Statement st(impl->db, "PRAGMA user_version");
        st.step();
        version = st.i32(0);
    }
    if (version != 0 && version != kSchemaVersion) {
        throw Error(Errc::migration, "schema version " + std::to_string(version) + " in " + abs.string() +
                                         " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    exec(impl->db, "PRAGMA foreign_keys = ON");
    {
        Transaction txn(impl->db);
        exec(impl->db, kSchema);
        if (version == 0) {
            exec(impl->db, ("PRAGMA user_version = " + std::to_string(kSchemaVersion)).c_str());
        }
        txn.commit();
    }
    return Store(std::move(impl));
}

ResumePoint Store::recover_session(const fs::path& db_path)
{
    if (!fs::exists(db_path)) {
        throw Error(Errc::not_found, "no state database at " + db_path.string());
    }
    Store store = open_or_create(db_path);
    {
        std::lock_guard lock(store.impl_->mu);
        Statement st(store.impl_->db, "PRAGMA integrity_check");
        std::string problems;
        while (st.step()) {
            const std::string line = st.text(0);
            if (line != "ok") {
                problems += line + "; ";
            }
        }
        if (!problems.empty()) {
            throw Error(Errc::corrupt, "state database " + db_path.string() + " failed integrity check: " + problems);
        }
    }
    return store.recover();
}

const fs::path& Store::db_path() const { return impl_->db_path; }
const fs::path& Store::artifact_root() const { return impl_->artifact_root; }

void Store::define_metric(const MetricDefinition& def)
{
    if (def.name.empty()) {
        throw Error(Errc::parameter, "metric name must not be empty");
    }
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);
    {
        Statement st(impl_->db, "SELECT direction FROM metric_definitions WHERE name = ?");
        st.bind(1, def.name);
        if (st.step() && parse_direction(st.text(0)) != def.direction) {
            throw Error(Errc::conflict, "metric '" + def.name + "' is already defined with direction " + st.text(0) +
                                            "; direction cannot be changed");
        }
    }
    if (def.is_primary) {
        exec(impl_->db, "UPDATE metric_definitions SET is_primary = 0");
    }
    Statement up(impl_->db,
                 "INSERT INTO metric_definitions (name, direction, description, target_value, is_primary) "
                 "VALUES (?, ?, ?, ?, ?) ON CONFLICT(name) DO UPDATE SET description = excluded.description, "
                 "target_value = excluded.target_value, is_primary = excluded.is_primary");
    up.bind(1, def.name).bind(2, to_string(def.direction)).bind(3, def.description).bind(4, def.target_value);
    up.bind(5, def.is_primary ? 1 : 0);
    up.run();
    impl_->refresh_all_winners();
    txn.commit();
}

std::vector<MetricDefinition> Store::metric_definitions() const
{
    std::lock_guard lock(impl_->mu);
    std::vector<MetricDefinition> out;
    Statement st(impl_->db, "SELECT name, direction, description, target_value, is_primary "
                            "FROM metric_definitions ORDER BY name");
    while (st.step()) {
        out.push_back({st.text(0), parse_direction(st.text(1)), st.text(2), st.opt_f64(3), st.i32(4) != 0});
    }
    return out;
}

std::optional<MetricDefinition> Store::primary_metric() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->primary();
}

void Store::begin_round(int round_index, Action action)
{
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);
    const int expected = impl_->next_round_index();
    if (round_index != expected) {
        throw Error(Errc::state, "round " + std::to_string(round_index) + " cannot start; next round index is " +
                                     std::to_string(expected));
    }
    Statement ins(impl_->db, "INSERT INTO rounds (round_index, action, status) VALUES (?, ?, 'running')");
    ins.bind(1, round_index).bind(2, to_string(action));
    ins.run();
    Statement ses(impl_->db, "UPDATE session_state SET active_round = ?, active_action = ? WHERE id = 1");
    ses.bind(1, round_index).bind(2, to_string(action));
    ses.run();
    txn.commit();
}

void Store::finish_round(int round_index, RoundStatus status, const std::string& summary)
{
    if (status == RoundStatus::running) {
        throw Error(Errc::parameter, "finish_round needs a terminal status");
    }
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);
    if (!impl_->round(round_index)) {
        throw Error(Errc::not_found, "round " + std::to_string(round_index) + " does not exist");
    }
    Statement up(impl_->db, "UPDATE rounds SET status = ?, summary = ? WHERE round_index = ?");
    up.bind(1, to_string(status)).bind(2, summary).bind(3, round_index);
    up.run();
    Statement ses(impl_->db, "UPDATE session_state SET active_round = NULL, active_action = NULL "
                             "WHERE id = 1 AND active_round = ?");
    ses.bind(1, round_index);
    ses.run();
    txn.commit();
}

std::optional<RoundRecord> Store::round(int round_index) const
{
    std::lock_guard lock(impl_->mu);
    return impl_->round(round_index);
}

std::vector<RoundRecord> Store::rounds() const
{
    std::lock_guard lock(impl_->mu);
    std::vector<RoundRecord> out;
    Statement st(impl_->db, "SELECT round_index, action, status, summary, winning_candidate_id "
                            "FROM rounds ORDER BY round_index");
    while (st.step()) {
        out.push_back({st.i32(0), parse_action(st.text(1)), parse_round_status(st.text(2)), st.text(3),
                       st.opt_i64(4)});
    }
    return out;
}

std::optional<int> Store::next_round_index() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->next_round_index();
}

CandidateId Store::submit_candidate(CandidateRecord rec, const std::vector<MetricSample>& metrics)
{
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);

    impl_->require_running_round(rec.round_index);
    const auto round = impl_->round(rec.round_index);
    if (round->action != rec.action) {
        throw Error(Errc::rejected, "candidate action " + std::string(to_string(rec.action)) +
                                        " does not match round action " + std::string(to_string(round->action)));
    }

    // artifact must be a workspace-relative path to an existing file
    const fs::path artifact = fs::path(rec.artifact_path).lexically_normal();
    if (rec.artifact_path.empty() || artifact.is_absolute() || artifact.begin()->string() == "..") {
        throw Error(Errc::rejected, "artifact path '" + rec.artifact_path + "' must be relative to the workspace");
    }
    if (!fs::is_regular_file(impl_->artifact_root / artifact)) {
        throw Error(Errc::rejected, "artifact '" + rec.artifact_path + "' does not exist in the workspace");
    }
    if (rec.candidate_root.empty()) {
        rec.candidate_root = artifact.parent_path().string();
    }

    // lineage rules
    const std::size_t np = rec.parent_ids.size();
    auto arity_error = [&](const char* need) {
        throw Error(Errc::rejected, std::string(to_string(rec.action)) + " candidates need " + need + " (got " +
                                        std::to_string(np) + ")");
    };
    std::vector<CandidateRecord> parents;
    for (const CandidateId pid : rec.parent_ids) {
        auto p = impl_->candidate(pid);
        if (!p) {
            throw Error(Errc::rejected, "parent candidate " + std::to_string(pid) + " does not exist");
        }
        parents.push_back(std::move(*p));
    }
    bool fresh_lineage = false;
    switch (rec.action) {
    case Action::baseline:
    case Action::generate:
        if (np != 0) {
            arity_error("no parents");
        }
        fresh_lineage = true;
        break;
    case Action::tune:
        if (np != 1) {
            arity_error("exactly 1 parent");
        }
        rec.lineage_id = parents[0].lineage_id;
        break;
    case Action::mutate:
        if (np != 1) {
            arity_error("exactly 1 parent");
        }
        rec.lineage_id = parents[0].lineage_id;
        break;
    case Action::evolve:
        if (np != 2) {
            arity_error("exactly 2 parents");
        }
        if (rec.parent_ids[0] == rec.parent_ids[1]) {
            throw Error(Errc::rejected, "evolve parents must be two distinct candidates");
        }
        fresh_lineage = true;
        break;
    }

    for (const auto& m : metrics) {
        if (!impl_->metric_defined(m.metric_name)) {
            throw Error(Errc::rejected, impl_->undefined_metric_message(m.metric_name));
        }
        if (!std::isfinite(m.value)) {
            throw Error(Errc::rejected, "metric '" + m.metric_name + "' has a non-finite value");
        }
    }

    Statement ins(impl_->db,
                  "INSERT INTO candidates (round_index, action, description, artifact_path, candidate_root, "
                  "lineage_id, parent_ids, settings, analysis, suggested_next_action, notes) "
                  "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, rec.round_index).bind(2, to_string(rec.action)).bind(3, rec.description);
    ins.bind(4, rec.artifact_path).bind(5, rec.candidate_root).bind(6, rec.lineage_id);
    ins.bind(7, ids_to_json(rec.parent_ids)).bind(8, rec.settings.dump()).bind(9, rec.analysis);
    if (rec.suggested_next_action) {
        ins.bind(10, to_string(*rec.suggested_next_action));
    } else {
        ins.bind_null(10);
    }
    ins.bind(11, rec.notes);
    ins.run();
    const CandidateId id = sqlite3_last_insert_rowid(impl_->db);

    if (fresh_lineage) {
        Statement up(impl_->db, "UPDATE candidates SET lineage_id = candidate_id WHERE candidate_id = ?");
        up.bind(1, id);
        up.run();
    }
    for (const auto& m : metrics) {
        Statement st(impl_->db, "INSERT OR REPLACE INTO metrics (candidate_id, metric_name, value) VALUES (?, ?, ?)");
        st.bind(1, id).bind(2, m.metric_name).bind(3, m.value);
        st.run();
    }
    impl_->refresh_winner(rec.round_index);
    txn.commit();
    return id;
}

void Store::log_metric(const MetricSample& sample)
{
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);
    const auto c = impl_->candidate(sample.candidate_id);
    if (!c) {
        throw Error(Errc::not_found, "candidate " + std::to_string(sample.candidate_id) + " does not exist");
    }
    if (!impl_->metric_defined(sample.metric_name)) {
        throw Error(Errc::rejected, impl_->undefined_metric_message(sample.metric_name));
    }
    if (!std::isfinite(sample.value)) {
        throw Error(Errc::parameter, "metric values must be finite");
    }
    Statement st(impl_->db, "INSERT OR REPLACE INTO metrics (candidate_id, metric_name, value) VALUES (?, ?, ?)");
    st.bind(1, sample.candidate_id).bind(2, sample.metric_name).bind(3, sample.value);
    st.run();
    impl_->refresh_winner(c->round_index);
    txn.commit();
}

std::optional<CandidateRecord> Store::candidate(CandidateId id) const
{
    std::lock_guard lock(impl_->mu);
    return impl_->candidate(id);
}

std::vector<CandidateRecord> Store::candidates() const
{
    std::lock_guard lock(impl_->mu);
    const std::string sql = std::string("SELECT ") + kCandidateColumns + " FROM candidates ORDER BY candidate_id";
    Statement st(impl_->db, sql.c_str());
    std::vector<CandidateRecord> out;
    while (st.step()) {
        out.push_back(read_candidate(st));
    }
    return out;
}

std::size_t Store::candidate_count() const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT COUNT(*) FROM candidates");
    st.step();
    return static_cast<std::size_t>(st.i64(0));
}

std::vector<MetricSample> Store::metrics_for(CandidateId id) const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT candidate_id, metric_name, value FROM metrics WHERE candidate_id = ? "
                            "ORDER BY metric_name");
    st.bind(1, id);
    std::vector<MetricSample> out;
    while (st.step()) {
        out.push_back({st.i64(0), st.text(1), st.f64(2)});
    }
    return out;
}

std::optional<double> Store::primary_value(CandidateId id) const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT m.value FROM metrics m JOIN metric_definitions d ON d.name = m.metric_name "
                            "WHERE d.is_primary = 1 AND m.candidate_id = ?");
    st.bind(1, id);
    if (!st.step()) {
        return std::nullopt;
    }
    return st.f64(0);
}

std::vector<MetricSample> Store::metric_history(const std::string& metric_name) const
{
    std::lock_guard lock(impl_->mu);
    if (!impl_->metric_defined(metric_name)) {
        throw Error(Errc::not_found, impl_->undefined_metric_message(metric_name));
    }
    Statement st(impl_->db, "SELECT m.candidate_id, m.metric_name, m.value FROM metrics m "
                            "JOIN candidates c ON c.candidate_id = m.candidate_id "
                            "WHERE m.metric_name = ? ORDER BY c.candidate_id");
    st.bind(1, metric_name);
    std::vector<MetricSample> out;
    while (st.step()) {
        out.push_back({st.i64(0), st.text(1), st.f64(2)});
    }
    return out;
}

std::vector<HistoryRow> Store::query_history(std::optional<std::size_t> top_n) const
{
    std::lock_guard lock(impl_->mu);
    const auto prim = impl_->primary();
    if (!prim) {
        throw Error(Errc::state, "no primary metric is defined");
    }
    const std::string sql =
        std::string("SELECT c.candidate_id, c.round_index, c.action, c.lineage_id, c.parent_ids, m.value, "
                    "c.description, c.analysis, c.suggested_next_action "
                    "FROM candidates c JOIN metrics m ON m.candidate_id = c.candidate_id "
                    "JOIN metric_definitions d ON d.name = m.metric_name AND d.is_primary = 1 "
                    "ORDER BY m.value ") +
        (prim->direction == Direction::minimize ? "ASC" : "DESC") +
        ", c.round_index ASC, c.candidate_id ASC LIMIT ?";
    Statement st(impl_->db, sql.c_str());
    st.bind(1, top_n ? static_cast<std::int64_t>(*top_n) : std::int64_t{-1});
    std::vector<HistoryRow> out;
    while (st.step()) {
        HistoryRow row;
        row.candidate_id = st.i64(0);
        row.round_index = st.i32(1);
        row.action = parse_action(st.text(2));
        row.lineage_id = st.i64(3);
        row.parent_ids = ids_from_json(st.text(4));
        row.primary_value = st.f64(5);
        row.description = st.text(6);
        std::string analysis = st.text(7);
        if (analysis.size() > 240) {
            analysis = analysis.substr(0, 240) + "...";
        }
        row.analysis_excerpt = std::move(analysis);
        if (auto s = st.opt_text(8)) {
            row.suggested_next_action = parse_action(*s);
        }
        out.push_back(std::move(row));
    }
    return out;
}

void Store::record_holdout_metric(const HoldoutMetricSample& sample)
{
    if (sample.value.has_value() == !sample.failure_note.empty()) {
        throw Error(Errc::parameter, sample.value ? "a holdout metric value must not carry a failure note"
                                                  : "a null holdout metric requires a failure note");
    }
    if (sample.value && !std::isfinite(*sample.value)) {
        throw Error(Errc::parameter, "holdout metric must be finite");
    }
    std::lock_guard lock(impl_->mu);
    if (!impl_->candidate(sample.candidate_id)) {
        throw Error(Errc::not_found, "candidate " + std::to_string(sample.candidate_id) + " does not exist");
    }
    Statement st(impl_->db, "INSERT OR REPLACE INTO holdout_test_metrics (candidate_id, value, failure_note, remarks) "
                            "VALUES (?, ?, ?, ?)");
    st.bind(1, sample.candidate_id).bind(2, sample.value).bind(3, sample.failure_note).bind(4, sample.remarks);
    st.run();
}

std::optional<HoldoutMetricSample> Store::holdout_metric(CandidateId id) const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT candidate_id, value, failure_note, remarks FROM holdout_test_metrics "
                            "WHERE candidate_id = ?");
    st.bind(1, id);
    if (!st.step()) {
        return std::nullopt;
    }
    return HoldoutMetricSample{st.i64(0), st.opt_f64(1), st.text(2), st.text(3)};
}

std::vector<HoldoutMetricSample> Store::holdout_metrics() const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT candidate_id, value, failure_note, remarks FROM holdout_test_metrics "
                            "ORDER BY candidate_id");
    std::vector<HoldoutMetricSample> out;
    while (st.step()) {
        out.push_back({st.i64(0), st.opt_f64(1), st.text(2), st.text(3)});
    }
    return out;
}

std::int64_t Store::record_failure(const FailureRecord& rec)
{
    if (rec.error_message.empty()) {
        throw Error(Errc::rejected, "a failure record needs a non-empty error message");
    }
    std::lock_guard lock(impl_->mu);
    impl_->require_running_round(rec.round_index);
    Statement st(impl_->db, "INSERT INTO candidate_failures (round_index, failing_code_path, parent_ids, "
                            "error_message, settings, metadata) VALUES (?, ?, ?, ?, ?, ?)");
    st.bind(1, rec.round_index).bind(2, rec.failing_code_path).bind(3, ids_to_json(rec.parent_ids));
    st.bind(4, rec.error_message).bind(5, rec.settings.dump()).bind(6, rec.metadata.dump());
    st.run();
    return sqlite3_last_insert_rowid(impl_->db);
}

std::vector<FailureRecord> Store::failures() const
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "SELECT failure_id, round_index, failing_code_path, parent_ids, error_message, settings, "
                            "metadata FROM candidate_failures ORDER BY failure_id");
    std::vector<FailureRecord> out;
    while (st.step()) {
        FailureRecord f;
        f.failure_id = st.i64(0);
        f.round_index = st.i32(1);
        f.failing_code_path = st.text(2);
        f.parent_ids = ids_from_json(st.text(3));
        f.error_message = st.text(4);
        f.settings = json_from_text(st.text(5));
        f.metadata = json_from_text(st.text(6));
        out.push_back(std::move(f));
    }
    return out;
}

SessionState Store::session_state() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->session();
}

void Store::set_phase(Phase phase)
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "UPDATE session_state SET phase = ? WHERE id = 1");
    st.bind(1, to_string(phase));
    st.run();
}

void Store::set_preparation_summary(const std::string& summary)
{
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "UPDATE session_state SET preparation_summary = ? WHERE id = 1");
    st.bind(1, summary);
    st.run();
}

void Store::stop(const std::string& reason)
{
    if (reason.empty()) {
        throw Error(Errc::parameter, "a stop reason is required");
    }
    std::lock_guard lock(impl_->mu);
    Statement st(impl_->db, "UPDATE session_state SET run_status = 'stopped', stop_reason = ? WHERE id = 1");
    st.bind(1, reason);
    st.run();
}

void Store::set_active()
{
    std::lock_guard lock(impl_->mu);
    exec(impl_->db, "UPDATE session_state SET run_status = 'active', stop_reason = NULL WHERE id = 1");
}

ResumePoint Store::recover()
{
    std::lock_guard lock(impl_->mu);
    Transaction txn(impl_->db);
    ResumePoint rp;
    {
        Statement st(impl_->db, "SELECT round_index FROM rounds WHERE status = 'running' ORDER BY round_index");
        while (st.step()) {
            rp.interrupted_rounds.push_back(st.i32(0));
        }
    }
    for (const int r : rp.interrupted_rounds) {
        Statement up(impl_->db, "UPDATE rounds SET status = 'failed', "
                                "summary = CASE WHEN summary = '' THEN 'interrupted; marked failed on recovery' "
                                "ELSE summary || ' (interrupted; marked failed on recovery)' END "
                                "WHERE round_index = ?");
        up.bind(1, r);
        up.run();
        Statement fail(impl_->db, "INSERT INTO candidate_failures (round_index, failing_code_path, parent_ids, "
                                  "error_message, settings, metadata) VALUES (?, '', '[]', ?, '{}', '{}')");
        fail.bind(1, r).bind(2, std::string("round interrupted; marked failed on recovery"));
        fail.run();
    }
    exec(impl_->db, "UPDATE session_state SET active_round = NULL, active_action = NULL WHERE id = 1");
    txn.commit();

    rp.state = impl_->session();
    if (rp.state.phase != Phase::finished) {
        rp.next_round = impl_->next_round_index();
    }
    return rp;
}

} // namespace algosearch
