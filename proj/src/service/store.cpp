#include "blobkit/service/store.hpp"

#include "blobkit/errors.hpp"
#include "blobkit/layout_text.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

namespace blobkit::service {

using nlohmann::json;
namespace fs = std::filesystem;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
    const auto millis =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&seconds, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
    return out;
}

json to_json(const LayoutRecord& record) {
    return {{"id", record.id},
            {"revision", record.revision},
            {"created_at", record.created_at},
            {"updated_at", record.updated_at},
            {"layout", layout_to_json(record.layout)}};
}

LayoutRecord record_from_json(const json& doc, std::size_t max_blobs) {
    if (!doc.is_object()) throw ParseError("record must be a JSON object");
    for (const char* key : {"id", "revision", "created_at", "updated_at", "layout"}) {
        if (!doc.contains(key)) throw ParseError(std::string("missing field: ") + key, {}, key);
    }
    if (!doc["id"].is_string() || !doc["revision"].is_number_unsigned() ||
        !doc["created_at"].is_string() || !doc["updated_at"].is_string()) {
        throw ParseError("record has fields of the wrong type");
    }
    LayoutRecord r;
    r.id = doc["id"];
    r.revision = doc["revision"];
    r.created_at = doc["created_at"];
    r.updated_at = doc["updated_at"];
    r.layout = layout_from_json(doc["layout"], max_blobs);
    return r;
}

void write_file_atomic(const fs::path& path, std::string_view data, const FaultHook& hook) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("cannot open " + tmp.string() + " for writing");

    auto write_all = [&](std::string_view chunk) {
        while (!chunk.empty()) {
            const ssize_t n = ::write(fd, chunk.data(), chunk.size());
            if (n < 0) {
                ::close(fd);
                throw Error("write failed for " + tmp.string());
            }
            chunk.remove_prefix(static_cast<std::size_t>(n));
        }
    };
    const std::size_t half = data.size() / 2;
    write_all(data.substr(0, half));
    if (hook) {
        try {
            hook("mid_write");
        } catch (...) {
            ::close(fd);
            throw;
        }
    }
    write_all(data.substr(half));
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw Error("fsync failed for " + tmp.string());
    }
    ::close(fd);

    if (hook) hook("before_rename");
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error("rename failed for " + path.string());
    }
    if (hook) hook("after_rename");
}

LayoutStore::LayoutStore(Options options)
    : options_(std::move(options)), rng_(std::random_device{}()) {
    if (!options_.data_dir) return;
    const fs::path& dir = *options_.data_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw Error("data directory " + dir.string() + " cannot be created");
    }
    if (::access(dir.c_str(), W_OK) != 0) {
        throw Error("data directory " + dir.string() + " is not writable");
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
        try {
            std::ifstream in(file, std::ios::binary);
            const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            LayoutRecord record = record_from_json(json::parse(text), options_.max_blobs);
            if (record.id != file.stem().string()) {
                throw ParseError("record id '" + record.id + "' does not match file name");
            }
            records_[record.id] = std::move(record);
        } catch (const std::exception& e) {
            load_warnings_.push_back("skipping " + file.filename().string() + ": " + e.what());
        }
    }
}

void LayoutStore::set_fault_hook(FaultHook hook) {
    std::unique_lock lock(mutex_);
    hook_ = std::move(hook);
}

void LayoutStore::persist(const LayoutRecord& record) const {
    if (!options_.data_dir) return;
    write_file_atomic(*options_.data_dir / (record.id + ".json"), to_json(record).dump(2) + "\n", hook_);
}

LayoutRecord LayoutStore::commit(LayoutRecord next) {
    persist(next);
    records_[next.id] = next;
    return next;
}

std::string LayoutStore::new_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    while (true) {
        std::uint64_t bits = rng_();
        std::string id(16, '0');
        for (char& ch : id) {
            ch = kHex[bits & 0xF];
            bits >>= 4;
        }
        if (!records_.count(id)) return id;
    }
}

const LayoutRecord& LayoutStore::existing(const std::string& id,
                                          std::optional<std::uint64_t> expected) const {
    const auto it = records_.find(id);
    if (it == records_.end()) throw NotFound("no layout with id '" + id + "'");
    if (expected && *expected != it->second.revision) {
        throw RevisionConflict("stale revision " + std::to_string(*expected) + " for layout '" + id +
                                   "' (current " + std::to_string(it->second.revision) + ")",
                               it->second.revision);
    }
    return it->second;
}

LayoutRecord LayoutStore::create(BlobLayout layout) {
    layout.validate(options_.max_blobs);
    std::unique_lock lock(mutex_);
    LayoutRecord record;
    record.id = new_id();
    record.layout = std::move(layout);
    record.created_at = utc_timestamp();
    record.updated_at = record.created_at;
    record.revision = 1;
    return commit(std::move(record));
}

std::optional<LayoutRecord> LayoutStore::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<LayoutRecord> LayoutStore::list() const {
    std::shared_lock lock(mutex_);
    std::vector<LayoutRecord> out;
    for (const auto& [id, record] : records_) out.push_back(record);
    return out;
}

LayoutRecord LayoutStore::replace(const std::string& id, BlobLayout layout,
                                  std::uint64_t expected_revision) {
    layout.validate(options_.max_blobs);
    std::unique_lock lock(mutex_);
    LayoutRecord next = existing(id, expected_revision);
    next.layout = std::move(layout);
    next.revision += 1;
    next.updated_at = utc_timestamp();
    return commit(std::move(next));
}

LayoutRecord LayoutStore::apply_edit(const std::string& id, const LayoutEdit& change,
                                     std::optional<std::uint64_t> expected_revision) {
    std::unique_lock lock(mutex_);
    LayoutRecord next = existing(id, expected_revision);
    next.layout = edit_layout(next.layout, change, options_.max_blobs);
    next.layout.validate(options_.max_blobs);
    next.revision += 1;
    next.updated_at = utc_timestamp();
    return commit(std::move(next));
}

}  // namespace blobkit::service
