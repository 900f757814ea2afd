#include "blobkit/service/config.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

namespace blobkit::service {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw InvalidArgument("invalid value '" + value + "' for " + key, key);
    }
    return out;
}

bool parse_bool(const std::string& key, std::string value) {
    std::transform(value.begin(), value.end(), value.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw InvalidArgument("invalid boolean '" + value + "' for " + key, key);
}

}  // namespace

void AppConfig::validate() const {
    default_canvas.validate();
    if (max_blobs < 1) throw InvalidArgument("max_blobs must be >= 1", "max_blobs");
    fit.validate();
    fourier.validate();
    port();
}

std::string AppConfig::host() const {
    const auto colon = listen_address.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("listen_address must be host:port", "listen_address");
    return listen_address.substr(0, colon);
}

int AppConfig::port() const {
    const auto colon = listen_address.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("listen_address must be host:port", "listen_address");
    const int port = parse_number<int>("listen_address", listen_address.substr(colon + 1));
    if (port < 0 || port > 65535) throw InvalidArgument("port out of range", "listen_address");
    return port;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "listen_address",  "canvas.width",        "canvas.height",           "max_blobs",
        "fit.max_iterations", "fit.iou_tolerance", "fit.raster_scale",       "fit.refine",
        "fourier.num_frequencies", "fourier.base", "fourier.scale",          "data_dir"};
    return keys;
}

std::string environment_name(const std::string& key) {
    std::string out = "BLOBKIT_";
    for (char ch : key) {
        out.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    return out;
}

Settings parse_config_text(std::string_view text) {
    Settings out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        out[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
    }
    return out;
}

Settings read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

Settings settings_from_environment(const EnvLookup& lookup) {
    Settings out;
    for (const std::string& key : config_keys()) {
        if (const char* value = lookup(environment_name(key).c_str())) out[key] = value;
    }
    return out;
}

void apply_setting(AppConfig& config, const std::string& key, const std::string& value) {
    if (key == "listen_address") {
        config.listen_address = value;
    } else if (key == "canvas.width") {
        config.default_canvas.width = parse_number<int>(key, value);
    } else if (key == "canvas.height") {
        config.default_canvas.height = parse_number<int>(key, value);
    } else if (key == "max_blobs") {
        config.max_blobs = parse_number<std::size_t>(key, value);
    } else if (key == "fit.max_iterations") {
        config.fit.max_iterations = parse_number<std::size_t>(key, value);
    } else if (key == "fit.iou_tolerance") {
        config.fit.iou_tolerance = parse_number<double>(key, value);
    } else if (key == "fit.raster_scale") {
        config.fit.raster_scale = parse_number<double>(key, value);
    } else if (key == "fit.refine") {
        config.fit.refine = parse_bool(key, value);
    } else if (key == "fourier.num_frequencies") {
        config.fourier.num_frequencies = parse_number<std::size_t>(key, value);
    } else if (key == "fourier.base") {
        config.fourier.base = parse_number<double>(key, value);
    } else if (key == "fourier.scale") {
        config.fourier.scale = parse_number<double>(key, value);
    } else if (key == "data_dir") {
        config.data_dir = value;
    } else {
        throw InvalidArgument("unknown config key '" + key + "'", key);
    }
}

AppConfig resolve_config(const Settings& file, const Settings& environment, const Settings& flags) {
    AppConfig config;
    for (const Settings* layer : {&file, &environment, &flags}) {
        for (const auto& [key, value] : *layer) apply_setting(config, key, value);
    }
    config.validate();
    return config;
}

}  // namespace blobkit::service
