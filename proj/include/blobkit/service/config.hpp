#pragma once

#include "blobkit/embedding.hpp"
#include "blobkit/fitting.hpp"
#include "blobkit/geometry.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>

namespace blobkit::service {

/// Recognized keys, as written in the config file:
///
///   listen_address          host:port            (127.0.0.1:8080)
///   canvas.width            pixels               (512)
///   canvas.height           pixels               (512)
///   max_blobs               count                (15)
///   fit.max_iterations      count                (200)
///   fit.iou_tolerance       real                 (0.001)
///   fit.raster_scale        real in (0, 1]       (1.0)
///   fit.refine              true|false           (true)
///   fourier.num_frequencies count                (8)
///   fourier.base            real                 (2.0)
///   fourier.scale           real                 (pi)
///   data_dir                path                 (blobkit-data)
///
/// The environment variable for a key is BLOBKIT_ followed by the key in
/// upper case with '.' replaced by '_' (BLOBKIT_FIT_RASTER_SCALE).
struct AppConfig {
    std::string listen_address = "127.0.0.1:8080";
    Canvas default_canvas;
    std::size_t max_blobs = kDefaultMaxBlobs;
    FitConfig fit;
    FourierConfig fourier;
    std::string data_dir = "blobkit-data";

    void validate() const;
    std::string host() const;
    int port() const;
};

using Settings = std::map<std::string, std::string>;

const std::vector<std::string>& config_keys();
std::string environment_name(const std::string& key);

/// "key = value" lines; blank lines and lines starting with '#' are skipped.
/// Throws ParseError naming the line on anything else.
Settings parse_config_text(std::string_view text);
Settings read_config_file(const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;
Settings settings_from_environment(const EnvLookup& lookup);

/// Sets one key; throws InvalidArgument (path = key) on an unknown key or a
/// malformed value.
void apply_setting(AppConfig& config, const std::string& key, const std::string& value);

/// Later layers win: defaults < file < environment < flags.
AppConfig resolve_config(const Settings& file, const Settings& environment, const Settings& flags);

}  // namespace blobkit::service
