#include "blobkit/layout_text.hpp"

#include <cmath>

namespace blobkit {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

const json& require(const json& obj, const std::string& key, const std::string& base) {
    if (!obj.is_object()) throw ParseError("expected object at " + (base.empty() ? "<root>" : base), {}, base);
    const auto it = obj.find(key);
    if (it == obj.end()) {
        const std::string path = join(base, key);
        throw ParseError("missing field: " + path, {}, path);
    }
    return *it;
}

double number_at(const json& obj, const std::string& key, const std::string& base) {
    const json& v = require(obj, key, base);
    if (!v.is_number()) {
        const std::string path = join(base, key);
        throw ParseError("invalid type at " + path + ": expected number", {}, path);
    }
    return v.get<double>();
}

std::string string_at(const json& obj, const std::string& key, const std::string& base) {
    const json& v = require(obj, key, base);
    if (!v.is_string()) {
        const std::string path = join(base, key);
        throw ParseError("invalid type at " + path + ": expected string", {}, path);
    }
    return v.get<std::string>();
}

int dimension_at(const json& obj, const std::string& key, const std::string& base) {
    const json& v = require(obj, key, base);
    if (!v.is_number_integer()) {
        const std::string path = join(base, key);
        throw ParseError("invalid type at " + path + ": expected integer", {}, path);
    }
    const auto n = v.get<long long>();
    if (n < 1 || n > 1'000'000) {
        throw InvalidArgument("canvas dimension out of range", join(base, key));
    }
    return static_cast<int>(n);
}

}  // namespace

json parameter_to_json(const BlobParameter& p) {
    return {{"cx", p.cx()}, {"cy", p.cy()}, {"a", p.a()}, {"b", p.b()}, {"theta_rad", p.theta()}};
}

BlobParameter parameter_from_json(const json& doc, const std::string& path) {
    const double cx = number_at(doc, "cx", path);
    const double cy = number_at(doc, "cy", path);
    const double a = number_at(doc, "a", path);
    const double b = number_at(doc, "b", path);
    const double theta = number_at(doc, "theta_rad", path);
    try {
        return BlobParameter(cx, cy, a, b, theta);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(e.what(), join(path, e.path()));
    }
}

json layout_to_json(const BlobLayout& layout) {
    json blobs = json::array();
    for (const Blob& b : layout.blobs) {
        json entry = parameter_to_json(b.parameter);
        entry["category"] = b.category;
        entry["description"] = b.description;
        blobs.push_back(std::move(entry));
    }
    return {{"canvas", {{"w", layout.canvas.width}, {"h", layout.canvas.height}}},
            {"caption", layout.global_caption},
            {"blobs", std::move(blobs)}};
}

BlobLayout layout_from_json(const json& doc, std::size_t max_blobs) {
    if (!doc.is_object()) throw ParseError("layout must be a JSON object");
    BlobLayout layout;
    const json& canvas = require(doc, "canvas", "");
    layout.canvas.width = dimension_at(canvas, "w", "canvas");
    layout.canvas.height = dimension_at(canvas, "h", "canvas");
    if (doc.contains("caption")) layout.global_caption = string_at(doc, "caption", "");

    const json& blobs = require(doc, "blobs", "");
    if (!blobs.is_array()) throw ParseError("invalid type at blobs: expected array", {}, "blobs");
    if (blobs.size() > max_blobs) {
        throw InvalidArgument("layout holds " + std::to_string(blobs.size()) +
                                  " blobs, maximum is " + std::to_string(max_blobs),
                              "blobs");
    }
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        const std::string path = "blobs[" + std::to_string(i) + "]";
        const json& entry = blobs[i];
        Blob blob;
        blob.category = string_at(entry, "category", path);
        blob.parameter = parameter_from_json(entry, path);
        blob.description =
            entry.is_object() && entry.contains("description") ? string_at(entry, "description", path)
                                                               : blob.category;
        try {
            blob.validate();
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(e.what(), join(path, e.path()));
        }
        layout.blobs.push_back(std::move(blob));
    }
    return layout;
}

std::string layout_json(const BlobLayout& layout) { return layout_to_json(layout).dump(2) + "\n"; }

BlobLayout parse_json(std::string_view text, std::size_t max_blobs) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    return layout_from_json(doc, max_blobs);
}

}  // namespace blobkit
