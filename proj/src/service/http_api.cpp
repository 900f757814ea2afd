#include "blobkit/service/http_api.hpp"

#include "blobkit/attention.hpp"
#include "blobkit/errors.hpp"
#include "blobkit/evaluation.hpp"
#include "blobkit/fitting.hpp"
#include "blobkit/json_io.hpp"
#include "blobkit/layout_text.hpp"
#include "blobkit/pgm.hpp"

#include "httplib.h"

#include <charconv>
#include <iostream>

namespace blobkit::service {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    json body;
};

ApiResponse json_response(int status, const json& body) {
    return {status, "application/json", body.dump() + "\n"};
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON body: ") + e.what());
    }
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t end = path.find('/', start);
        if (end == std::string::npos) end = path.size();
        if (end > start) parts.push_back(path.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

std::size_t index_field(const json& doc) {
    if (!doc.contains("index")) throw ParseError("missing field: index", {}, "index");
    if (!doc["index"].is_number_unsigned()) {
        throw ParseError("invalid type at index: expected non-negative integer", {}, "index");
    }
    return doc["index"].get<std::size_t>();
}

double number_field(const json& doc, const char* key) {
    if (!doc.contains(key)) throw ParseError(std::string("missing field: ") + key, {}, key);
    if (!doc[key].is_number()) {
        throw ParseError(std::string("invalid type at ") + key + ": expected number", {}, key);
    }
    return doc[key].get<double>();
}

LayoutEdit edit_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("op") || !doc["op"].is_string()) {
        throw ParseError("missing field: op", {}, "op");
    }
    const std::string op = doc["op"];
    if (op == "move") return edit::Move{index_field(doc), number_field(doc, "cx"), number_field(doc, "cy")};
    if (op == "rotate") {
        const double theta = doc.contains("angle_deg") ? degrees_to_radians(number_field(doc, "angle_deg"))
                                                       : number_field(doc, "theta_rad");
        return edit::Rotate{index_field(doc), theta};
    }
    if (op == "resize") return edit::Resize{index_field(doc), number_field(doc, "a"), number_field(doc, "b")};
    if (op == "set_description") {
        if (!doc.contains("text") || !doc["text"].is_string()) throw ParseError("missing field: text", {}, "text");
        return edit::SetDescription{index_field(doc), doc["text"].get<std::string>()};
    }
    if (op == "add") {
        if (!doc.contains("blob")) throw ParseError("missing field: blob", {}, "blob");
        const json& b = doc["blob"];
        if (!b.is_object() || !b.contains("category") || !b["category"].is_string()) {
            throw ParseError("missing field: blob.category", {}, "blob.category");
        }
        Blob blob;
        blob.category = b["category"];
        blob.parameter = parameter_from_json(b, "blob");
        blob.description = b.contains("description") && b["description"].is_string()
                               ? b["description"].get<std::string>()
                               : blob.category;
        return edit::Add{std::move(blob)};
    }
    if (op == "remove") return edit::Remove{index_field(doc)};
    throw ParseError("unknown edit op '" + op + "'", {}, "op");
}

BlobLayout layout_body(const json& doc, std::size_t max_blobs) {
    if (doc.is_object() && doc.contains("layout")) return layout_from_json(doc["layout"], max_blobs);
    return layout_from_json(doc, max_blobs);
}

Canvas canvas_field(const json& doc, const Canvas& fallback) {
    if (!doc.is_object() || !doc.contains("canvas")) return fallback;
    const json& c = doc["canvas"];
    if (!c.is_object() || !c.contains("w") || !c.contains("h") || !c["w"].is_number_integer() ||
        !c["h"].is_number_integer()) {
        throw ParseError("canvas must be {\"w\": int, \"h\": int}", {}, "canvas");
    }
    Canvas canvas{c["w"].get<int>(), c["h"].get<int>()};
    canvas.validate();
    return canvas;
}

json diagnostics(const BlobLayout& layout) {
    const Canvas& canvas = layout.canvas;
    std::vector<BinaryMask> masks;
    masks.reserve(layout.blobs.size());
    for (const Blob& b : layout.blobs) masks.push_back(rasterize(b.parameter, canvas));

    json pairwise = json::array();
    for (std::size_t i = 0; i < masks.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < masks.size(); ++j) {
            try {
                row.push_back(mask_iou(masks[i], masks[j]));
            } catch (const DegenerateInput&) {
                row.push_back(nullptr);
            }
        }
        pairwise.push_back(std::move(row));
    }

    json out_of_canvas = json::array();
    json fully_outside = json::array();
    json foreground = json::array();
    for (std::size_t i = 0; i < layout.blobs.size(); ++i) {
        const BoundingBox box = bounding_box(layout.blobs[i].parameter);
        out_of_canvas.push_back(box.x_min < 0.0 || box.y_min < 0.0 || box.x_max > canvas.width ||
                                box.y_max > canvas.height);
        fully_outside.push_back(masks[i].count() == 0);
        foreground.push_back(masks[i].count());
    }

    std::size_t covered = 0;
    const std::size_t total = static_cast<std::size_t>(canvas.width) * static_cast<std::size_t>(canvas.height);
    for (std::size_t k = 0; k < total; ++k) {
        for (const BinaryMask& m : masks) {
            if (m.bits()[k]) {
                ++covered;
                break;
            }
        }
    }
    return {{"pairwise_iou", pairwise},
            {"out_of_canvas", out_of_canvas},
            {"fully_outside", fully_outside},
            {"foreground", foreground},
            {"coverage", static_cast<double>(covered) / static_cast<double>(total)}};
}

template <typename T>
T query_number(const std::map<std::string, std::string>& query, const std::string& key, T fallback) {
    const auto it = query.find(key);
    if (it == query.end()) return fallback;
    T out{};
    const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), out);
    if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
        throw ParseError("invalid query parameter " + key, {}, key);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> run_length_encode(const BinaryMask& mask) {
    std::vector<std::size_t> runs;
    std::uint8_t current = 0;
    std::size_t length = 0;
    for (std::uint8_t bit : mask.bits()) {
        if (bit == current) {
            ++length;
        } else {
            runs.push_back(length);
            current = bit;
            length = 1;
        }
    }
    runs.push_back(length);
    return runs;
}

BinaryMask run_length_decode(int width, int height, const std::vector<std::size_t>& runs) {
    std::vector<std::uint8_t> bits;
    std::uint8_t current = 0;
    for (std::size_t run : runs) {
        bits.insert(bits.end(), run, current);
        current ^= 1;
    }
    return BinaryMask(width, height, std::move(bits));
}

Api::Api(AppConfig config, LayoutStore& store) : config_(std::move(config)), store_(store) {}

ApiResponse Api::handle(const ApiRequest& request) const {
    try {
        return route(request);
    } catch (const NotFound& e) {
        return json_response(404, {{"error", e.what()}});
    } catch (const RevisionConflict& e) {
        return json_response(409, {{"error", e.what()}, {"current_revision", e.current_revision()}});
    } catch (const ParseError& e) {
        json body = {{"error", e.what()}, {"path", e.path()}};
        if (!e.rejects().empty()) {
            json rejects = json::array();
            for (const auto& r : e.rejects()) {
                rejects.push_back({{"line", r.line_number}, {"text", r.text}, {"reason", r.reason}});
            }
            body["rejects"] = rejects;
        }
        return json_response(400, body);
    } catch (const InvalidArgument& e) {
        return json_response(422, {{"error", e.what()}, {"path", e.path()}});
    } catch (const DegenerateInput& e) {
        return json_response(422, {{"error", e.what()}, {"path", ""}});
    } catch (const json::exception& e) {
        return json_response(400, {{"error", e.what()}, {"path", ""}});
    } catch (const std::exception& e) {
        return json_response(500, {{"error", e.what()}});
    }
}

ApiResponse Api::route(const ApiRequest& req) const {
    const auto parts = split_path(req.path);
    const std::string& method = req.method;
    const std::size_t max_blobs = store_.max_blobs();

    if (parts.size() == 1 && parts[0] == "health" && method == "GET") {
        return json_response(200, {{"status", "ok"}});
    }

    if (!parts.empty() && parts[0] == "layouts") {
        if (parts.size() == 1 && method == "POST") {
            const LayoutRecord record = store_.create(layout_body(parse_body(req.body), max_blobs));
            return json_response(201, to_json(record));
        }
        if (parts.size() == 1 && method == "GET") {
            json items = json::array();
            for (const LayoutRecord& r : store_.list()) {
                items.push_back({{"id", r.id}, {"revision", r.revision}, {"updated_at", r.updated_at}});
            }
            return json_response(200, {{"layouts", items}});
        }
        if (parts.size() == 2 && method == "GET") {
            const auto record = store_.get(parts[1]);
            if (!record) throw NotFound("no layout with id '" + parts[1] + "'");
            return json_response(200, to_json(*record));
        }
        if (parts.size() == 2 && method == "PUT") {
            const json doc = parse_body(req.body);
            if (!doc.is_object() || !doc.contains("revision")) {
                throw ParseError("missing field: revision", {}, "revision");
            }
            if (!doc["revision"].is_number_unsigned()) {
                throw ParseError("invalid type at revision: expected non-negative integer", {}, "revision");
            }
            if (!doc.contains("layout")) throw ParseError("missing field: layout", {}, "layout");
            if (!store_.get(parts[1])) throw NotFound("no layout with id '" + parts[1] + "'");
            const LayoutRecord record = store_.replace(
                parts[1], layout_from_json(doc["layout"], max_blobs), doc["revision"].get<std::uint64_t>());
            return json_response(200, to_json(record));
        }
        if (parts.size() == 3 && parts[2] == "edit" && method == "POST") {
            const json doc = parse_body(req.body);
            std::optional<std::uint64_t> revision;
            if (doc.is_object() && doc.contains("revision")) {
                if (!doc["revision"].is_number_unsigned()) {
                    throw ParseError("invalid type at revision: expected non-negative integer", {}, "revision");
                }
                revision = doc["revision"].get<std::uint64_t>();
            }
            const LayoutRecord record = store_.apply_edit(parts[1], edit_from_json(doc), revision);
            return json_response(200, to_json(record));
        }
    }

    if (parts.size() == 1 && method == "POST") {
        const std::string& op = parts[0];
        if (op == "fit") {
            FitConfig fit = config_.fit;
            fit.max_iterations = query_number<std::size_t>(req.query, "max_iterations", fit.max_iterations);
            fit.iou_tolerance = query_number<double>(req.query, "iou_tolerance", fit.iou_tolerance);
            fit.raster_scale = query_number<double>(req.query, "raster_scale", fit.raster_scale);
            if (const auto it = req.query.find("refine"); it != req.query.end()) {
                fit.refine = it->second != "false" && it->second != "0";
            }
            const BinaryMask mask = decode_pgm(req.body);
            return json_response(200, to_json(fit_ellipse(mask, fit)));
        }
        if (op == "rasterize") {
            const BlobLayout layout = layout_body(parse_body(req.body), max_blobs);
            json masks = json::array();
            for (std::size_t i = 0; i < layout.blobs.size(); ++i) {
                const BinaryMask m = rasterize(layout.blobs[i].parameter, layout.canvas);
                masks.push_back({{"index", i},
                                 {"category", layout.blobs[i].category},
                                 {"foreground", m.count()},
                                 {"runs", run_length_encode(m)}});
            }
            return json_response(200, {{"width", layout.canvas.width},
                                       {"height", layout.canvas.height},
                                       {"encoding", "rle-row-major-background-first"},
                                       {"masks", masks}});
        }
        if (op == "diagnostics") {
            return json_response(200, diagnostics(layout_body(parse_body(req.body), max_blobs)));
        }
        if (op == "attention-mask") {
            const json doc = parse_body(req.body);
            if (!doc.is_object() || !doc.contains("blob")) throw ParseError("missing field: blob", {}, "blob");
            for (const char* key : {"h", "w"}) {
                if (!doc.contains(key) || !doc[key].is_number_unsigned()) {
                    throw ParseError(std::string("missing field: ") + key, {}, key);
                }
            }
            const Canvas canvas = canvas_field(doc, config_.default_canvas);
            const BlobParameter p = parameter_from_json(doc["blob"], "blob");
            const std::size_t h = doc["h"];
            const std::size_t w = doc["w"];
            return json_response(200, {{"h", h}, {"w", w}, {"bits", blob_attention_mask(p, canvas, h, w)}});
        }
        if (op == "eval") {
            const json doc = parse_body(req.body);
            if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array()) {
                throw ParseError("missing field: cases", {}, "cases");
            }
            const json layouts = doc.value("layouts", json::object());
            std::vector<CaseResult> results;
            for (const json& c : doc["cases"]) {
                const BenchmarkCase bench = benchmark_case_from_json(c);
                BlobLayout layout;
                layout.canvas = config_.default_canvas;
                if (layouts.contains(bench.id)) {
                    const json& l = layouts[bench.id];
                    if (l.is_string()) {
                        try {
                            layout = parse_css(l.get<std::string>(), config_.default_canvas, max_blobs).layout;
                        } catch (const ParseError&) {
                            // An unparseable completion scores as an empty layout.
                        }
                    } else {
                        layout = layout_from_json(l, max_blobs);
                    }
                }
                results.push_back(score_case(bench, layout));
            }
            return json_response(200, to_json(aggregate(results)));
        }
        if (op == "import") {
            const json doc = parse_body(req.body);
            if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
                throw ParseError("missing field: text", {}, "text");
            }
            const std::string format = doc.value("format", "json");
            const std::string text = doc["text"];
            json rejects = json::array();
            json warnings = json::array();
            BlobLayout layout;
            if (format == "css") {
                const CssParseResult parsed =
                    parse_css(text, canvas_field(doc, config_.default_canvas), max_blobs);
                layout = parsed.layout;
                if (doc.contains("caption") && doc["caption"].is_string()) layout.global_caption = doc["caption"];
                for (const auto& r : parsed.rejects) {
                    rejects.push_back({{"line", r.line_number}, {"text", r.text}, {"reason", r.reason}});
                }
                for (const auto& w : parsed.warnings) {
                    warnings.push_back({{"line", w.line_number}, {"message", w.message}});
                }
            } else if (format == "json") {
                layout = parse_json(text, max_blobs);
            } else {
                throw ParseError("unknown import format '" + format + "'", {}, "format");
            }
            json body = to_json(store_.create(std::move(layout)));
            body["rejects"] = rejects;
            body["warnings"] = warnings;
            return json_response(201, body);
        }
    }

    if (parts.size() == 2 && parts[0] == "export" && method == "GET") {
        const auto record = store_.get(parts[1]);
        if (!record) throw NotFound("no layout with id '" + parts[1] + "'");
        const auto it = req.query.find("format");
        const std::string format = it == req.query.end() ? "json" : it->second;
        if (format == "css") return {200, "text/plain; charset=utf-8", serialize_css(record->layout)};
        if (format == "desc") return {200, "text/plain; charset=utf-8", serialize_descriptions(record->layout)};
        if (format == "json") return {200, "application/json", layout_json(record->layout)};
        throw ParseError("unknown export format '" + format + "'", {}, "format");
    }

    return json_response(404, {{"error", "no route for " + method + " " + req.path}});
}

HttpServer::HttpServer(const Api& api) : api_(api), server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest request{req.method, req.path, {}, req.body};
        for (const auto& [key, value] : req.params) request.query[key] = value;
        const ApiResponse response = api_.handle(request);
        res.status = response.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(response.body, response.content_type);
    };
    const std::string any = R"(/.*)";
    server_->Get(any, handler);
    server_->Post(any, handler);
    server_->Put(any, handler);
    server_->Options(any, [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

}  // namespace blobkit::service
