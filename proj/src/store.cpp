// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/store.hpp"

#include <sqlite3.h>

#include <random>

#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/hash.hpp"

namespace vides {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS projects (
  project_id TEXT PRIMARY KEY,
  name TEXT NOT NULL,
  created_at TEXT NOT NULL,
  updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS images (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  image_id TEXT UNIQUE NOT NULL,
  project_id TEXT REFERENCES projects(project_id),
  role TEXT NOT NULL,
  parent_image_id TEXT,
  job_id TEXT,
  blob TEXT NOT NULL,
  width INTEGER NOT NULL,
  height INTEGER NOT NULL,
  created_at TEXT NOT NULL,
  deleted INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS masks (
  mask_id TEXT PRIMARY KEY,
  image_id TEXT NOT NULL,
  mask_image_id TEXT NOT NULL,
  metadata TEXT NOT NULL,
  created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  job_id TEXT UNIQUE NOT NULL,
  project_id TEXT,
  status TEXT NOT NULL,
  record TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS jobs_status ON jobs(status);
)sql";

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw StorageError(std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int idx, std::string_view v) {
        check(sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int idx, const std::string& v) { return bind(idx, std::string_view(v)); }
    Statement& bind(int idx, const std::optional<std::string>& v) {
        if (v) return bind(idx, std::string_view(*v));
        check(sqlite3_bind_null(stmt_, idx));
        return *this;
    }
    Statement& bind(int idx, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, idx, v));
        return *this;
    }
    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StorageError(std::string("sqlite step failed: ") + sqlite3_errmsg(db_));
    }
    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p)) : std::string();
    }
    std::optional<std::string> opt_text(int col) const {
        if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
        return text(col);
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    int changes() const { return sqlite3_changes(db_); }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StorageError(std::string("sqlite bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StorageError("sqlite exec failed: " + msg);
    }
}

constexpr const char* kImageColumns =
    "image_id, project_id, role, parent_image_id, job_id, blob, width, height, created_at";

ImageRecord read_image(const Statement& s) {
    ImageRecord r;
    r.image_id = s.text(0);
    r.project_id = s.opt_text(1);
    r.role = parse_image_role(s.text(2));
    r.parent_image_id = s.opt_text(3);
    r.job_id = s.opt_text(4);
    r.blob = s.text(5);
    r.width = static_cast<int>(s.integer(6));
    r.height = static_cast<int>(s.integer(7));
    r.created_at = s.text(8);
    return r;
}

}  // namespace

std::string_view to_string(ImageRole role) {
    switch (role) {
        case ImageRole::uploaded: return "uploaded";
        case ImageRole::generated: return "generated";
        case ImageRole::condition: return "condition";
        case ImageRole::mask: return "mask";
    }
    return "uploaded";
}

ImageRole parse_image_role(std::string_view text) {
    if (text == "uploaded") return ImageRole::uploaded;
    if (text == "generated") return ImageRole::generated;
    if (text == "condition") return ImageRole::condition;
    if (text == "mask") return ImageRole::mask;
    throw ValidationError("unknown image role '" + std::string(text) + "'", "role");
}

void to_json(Json& j, const ImageRecord& r) {
    j = Json{{"image_id", r.image_id},
             {"project_id", r.project_id ? Json(*r.project_id) : Json(nullptr)},
             {"role", to_string(r.role)},
             {"parent_image_id", r.parent_image_id ? Json(*r.parent_image_id) : Json(nullptr)},
             {"job_id", r.job_id ? Json(*r.job_id) : Json(nullptr)},
             {"blob", r.blob},
             {"path", "/api/v1/images/" + r.image_id},
             {"width", r.width},
             {"height", r.height},
             {"created_at", r.created_at}};
}

void to_json(Json& j, const Project& p) {
    j = Json{{"project_id", p.project_id},
             {"name", p.name},
             {"images", p.images},
             {"created_at", p.created_at},
             {"updated_at", p.updated_at}};
}

std::string make_id(std::string_view prefix) {
    thread_local std::mt19937_64 rng{std::random_device{}() ^
                                     (static_cast<std::uint64_t>(std::random_device{}()) << 32)};
    return std::string(prefix) + "_" + to_hex(rng()) + to_hex(rng()).substr(0, 8);
}

Store::Store(const std::filesystem::path& root) : root_(root) {
    std::filesystem::create_directories(root_ / "blobs");
    const auto db_path = root_ / "vides.db";
    if (sqlite3_open(db_path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw StorageError("cannot open " + db_path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec(db_, "PRAGMA journal_mode=WAL; PRAGMA synchronous=FULL; PRAGMA foreign_keys=ON;");
    exec(db_, kSchema);
}

Store::~Store() { sqlite3_close(db_); }

std::filesystem::path Store::blob_path(std::string_view hash) const {
    return root_ / "blobs" / std::string(hash.substr(0, 2)) / (std::string(hash.substr(2)) + ".png");
}

std::string Store::put_blob(std::span<const std::uint8_t> bytes) {
    const std::string hash = sha256_hex(bytes);
    const auto path = blob_path(hash);
    std::lock_guard lock(mutex_);
    if (!std::filesystem::exists(path)) write_file_atomic(path, bytes);
    return hash;
}

std::vector<std::uint8_t> Store::get_blob(std::string_view hash) const {
    const auto path = blob_path(hash);
    if (!std::filesystem::exists(path)) throw StorageError("blob " + std::string(hash) + " is missing");
    auto bytes = read_file(path);
    if (sha256_hex(bytes) != hash) throw StorageError("blob " + std::string(hash) + " failed its integrity check");
    return bytes;
}

std::size_t Store::blob_count() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root_ / "blobs"))
        if (e.is_regular_file() && e.path().extension() == ".png") ++n;
    return n;
}

Project Store::create_project(const std::string& name) {
    Project p;
    p.project_id = make_id("prj");
    p.name = name;
    p.created_at = p.updated_at = utc_timestamp();
    std::lock_guard lock(mutex_);
    Statement s(db_, "INSERT INTO projects(project_id, name, created_at, updated_at) VALUES(?,?,?,?)");
    s.bind(1, p.project_id).bind(2, p.name).bind(3, p.created_at).bind(4, p.updated_at).step();
    return p;
}

std::optional<Project> Store::get_project(std::string_view project_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT project_id, name, created_at, updated_at FROM projects WHERE project_id = ?");
    s.bind(1, project_id);
    if (!s.step()) return std::nullopt;
    Project p{s.text(0), s.text(1), {}, s.text(2), s.text(3)};
    Statement imgs(db_, (std::string("SELECT ") + kImageColumns +
                         " FROM images WHERE project_id = ? AND deleted = 0 ORDER BY seq")
                            .c_str());
    imgs.bind(1, project_id);
    while (imgs.step()) p.images.push_back(read_image(imgs));
    return p;
}

ImageRecord Store::add_image(std::optional<std::string> project_id, ImageRole role,
                             std::optional<std::string> parent_image_id, std::optional<std::string> job_id,
                             std::span<const std::uint8_t> png, int width, int height) {
    ImageRecord r;
    r.image_id = make_id("img");
    r.project_id = std::move(project_id);
    r.role = role;
    r.parent_image_id = std::move(parent_image_id);
    r.job_id = std::move(job_id);
    r.width = width;
    r.height = height;
    r.created_at = utc_timestamp();
    r.blob = put_blob(png);
    std::lock_guard lock(mutex_);
    if (r.project_id) {
        Statement check(db_, "SELECT 1 FROM projects WHERE project_id = ?");
        check.bind(1, *r.project_id);
        if (!check.step()) throw NotFoundError("project " + *r.project_id + " does not exist");
    }
    if (r.parent_image_id) {
        Statement check(db_, "SELECT 1 FROM images WHERE image_id = ?");
        check.bind(1, *r.parent_image_id);
        if (!check.step()) throw NotFoundError("parent image " + *r.parent_image_id + " does not exist");
    }
    exec(db_, "BEGIN IMMEDIATE");
    try {
        Statement s(db_,
                    "INSERT INTO images(image_id, project_id, role, parent_image_id, job_id, blob, width, height, "
                    "created_at) VALUES(?,?,?,?,?,?,?,?,?)");
        s.bind(1, r.image_id)
            .bind(2, r.project_id)
            .bind(3, to_string(r.role))
            .bind(4, r.parent_image_id)
            .bind(5, r.job_id)
            .bind(6, r.blob)
            .bind(7, std::int64_t{width})
            .bind(8, std::int64_t{height})
            .bind(9, r.created_at)
            .step();
        if (r.project_id) {
            Statement u(db_, "UPDATE projects SET updated_at = ? WHERE project_id = ?");
            u.bind(1, r.created_at).bind(2, *r.project_id).step();
        }
        exec(db_, "COMMIT");
    } catch (...) {
        exec(db_, "ROLLBACK");
        throw;
    }
    return r;
}

std::optional<ImageRecord> Store::get_image(std::string_view image_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, (std::string("SELECT ") + kImageColumns + " FROM images WHERE image_id = ? AND deleted = 0").c_str());
    s.bind(1, image_id);
    if (!s.step()) return std::nullopt;
    return read_image(s);
}

bool Store::delete_image(std::string_view image_id) {
    std::lock_guard lock(mutex_);
    Statement s(db_, "UPDATE images SET deleted = 1 WHERE image_id = ? AND deleted = 0");
    s.bind(1, image_id).step();
    return s.changes() > 0;
}

MaskRecord Store::add_mask(const std::string& image_id, const std::string& mask_image_id, const Json& metadata) {
    MaskRecord m{make_id("msk"), image_id, mask_image_id, metadata, utc_timestamp()};
    std::lock_guard lock(mutex_);
    Statement s(db_, "INSERT INTO masks(mask_id, image_id, mask_image_id, metadata, created_at) VALUES(?,?,?,?,?)");
    s.bind(1, m.mask_id).bind(2, m.image_id).bind(3, m.mask_image_id).bind(4, metadata.dump()).bind(5, m.created_at).step();
    return m;
}

std::optional<MaskRecord> Store::get_mask(std::string_view mask_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT mask_id, image_id, mask_image_id, metadata, created_at FROM masks WHERE mask_id = ?");
    s.bind(1, mask_id);
    if (!s.step()) return std::nullopt;
    return MaskRecord{s.text(0), s.text(1), s.text(2), Json::parse(s.text(3)), s.text(4)};
}

void Store::insert_job(const DesignJob& job, const std::optional<std::string>& project_id) {
    std::lock_guard lock(mutex_);
    Statement s(db_, "INSERT INTO jobs(job_id, project_id, status, record) VALUES(?,?,?,?)");
    s.bind(1, job.job_id).bind(2, project_id).bind(3, to_string(job.status)).bind(4, Json(job).dump()).step();
}

void Store::update_job(const DesignJob& job) {
    std::lock_guard lock(mutex_);
    Statement s(db_, "UPDATE jobs SET status = ?, record = ? WHERE job_id = ?");
    s.bind(1, to_string(job.status)).bind(2, Json(job).dump()).bind(3, job.job_id).step();
    if (s.changes() == 0) throw NotFoundError("job " + job.job_id + " does not exist");
}

std::optional<DesignJob> Store::get_job(std::string_view job_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT record FROM jobs WHERE job_id = ?");
    s.bind(1, job_id);
    if (!s.step()) return std::nullopt;
    return Json::parse(s.text(0)).get<DesignJob>();
}

std::optional<std::string> Store::job_project(std::string_view job_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT project_id FROM jobs WHERE job_id = ?");
    s.bind(1, job_id);
    if (!s.step()) return std::nullopt;
    return s.opt_text(0);
}

std::vector<DesignJob> Store::jobs_with_status(JobStatus status) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT record FROM jobs WHERE status = ? ORDER BY seq");
    s.bind(1, to_string(status));
    std::vector<DesignJob> out;
    while (s.step()) out.push_back(Json::parse(s.text(0)).get<DesignJob>());
    return out;
}

}  // namespace vides
