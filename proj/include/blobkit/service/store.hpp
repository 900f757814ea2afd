#pragma once

#include "blobkit/geometry.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace blobkit::service {

struct LayoutRecord {
    std::string id;
    BlobLayout layout;
    std::string created_at;
    std::string updated_at;
    std::uint64_t revision = 0;

    bool operator==(const LayoutRecord&) const = default;
};

nlohmann::json to_json(const LayoutRecord& record);
LayoutRecord record_from_json(const nlohmann::json& doc, std::size_t max_blobs);

/// Called at named points of a persisted write ("mid_write",
/// "before_rename", "after_rename"). Throwing from it simulates a crash at
/// that point.
using FaultHook = std::function<void(std::string_view stage)>;

/// Writes `data` to `path` through a sibling temp file, fsync and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view data,
                       const FaultHook& hook = {});

/// In-memory layout records with optional file-per-record persistence.
///
/// Readers share the lock; each mutation holds it exclusively, persists
/// first and only then updates memory, so a failed write leaves the store
/// unchanged.
class LayoutStore {
public:
    struct Options {
        std::optional<std::filesystem::path> data_dir;
        std::size_t max_blobs = kDefaultMaxBlobs;
    };

    /// Loads every `<id>.json` record in data_dir, skipping unreadable ones
    /// (see load_warnings()). Throws Error if data_dir cannot be created or
    /// written.
    explicit LayoutStore(Options options);

    const std::vector<std::string>& load_warnings() const noexcept { return load_warnings_; }
    void set_fault_hook(FaultHook hook);

    LayoutRecord create(BlobLayout layout);
    std::optional<LayoutRecord> get(const std::string& id) const;
    std::vector<LayoutRecord> list() const;

    /// Full replace. Throws NotFound, or RevisionConflict if
    /// expected_revision is not the current revision.
    LayoutRecord replace(const std::string& id, BlobLayout layout, std::uint64_t expected_revision);

    /// One edit_layout step; the revision check is skipped when
    /// expected_revision is empty.
    LayoutRecord apply_edit(const std::string& id, const LayoutEdit& change,
                            std::optional<std::uint64_t> expected_revision);

    std::size_t max_blobs() const noexcept { return options_.max_blobs; }

private:
    void persist(const LayoutRecord& record) const;
    LayoutRecord commit(LayoutRecord next);
    const LayoutRecord& existing(const std::string& id, std::optional<std::uint64_t> expected) const;
    std::string new_id();

    Options options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, LayoutRecord> records_;
    std::vector<std::string> load_warnings_;
    FaultHook hook_;
    std::mt19937_64 rng_;
};

/// Current UTC time as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string utc_timestamp();

}  // namespace blobkit::service
