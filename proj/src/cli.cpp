#include "blobkit/cli.hpp"

#include "blobkit/attention.hpp"
#include "blobkit/errors.hpp"
#include "blobkit/evaluation.hpp"
#include "blobkit/fitting.hpp"
#include "blobkit/json_io.hpp"
#include "blobkit/layout_text.hpp"
#include "blobkit/pgm.hpp"
#include "blobkit/render.hpp"
#include "blobkit/service/config.hpp"
#include "blobkit/service/http_api.hpp"
#include "blobkit/service/store.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

namespace blobkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_input(const std::string& path, std::istream& in) {
    if (path == "-") {
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open " + path);
    return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

json read_json(const std::string& path, std::istream& in) {
    try {
        return json::parse(read_input(path, in));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": malformed JSON: " + e.what());
    }
}

void write_output(const std::string& path, const std::string& data, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << data;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write " + path);
    file << data;
}

PromptBundle bundle_from_json(const json& doc, std::size_t max_blobs) {
    if (!doc.is_object()) throw ParseError("prompt bundle must be a JSON object");
    PromptBundle bundle;
    bundle.system_instruction = doc.value("system_instruction", "");
    bundle.test_caption = doc.value("test_caption", "");
    for (const json& d : doc.value("demonstrations", json::array())) {
        Demonstration demo;
        demo.caption = d.value("caption", "");
        if (d.contains("layout")) {
            demo.content = layout_from_json(d["layout"], max_blobs);
        } else if (d.contains("text") && d["text"].is_string()) {
            demo.content = d["text"].get<std::string>();
        } else {
            throw ParseError("demonstration needs \"layout\" or \"text\"", {}, "demonstrations");
        }
        bundle.demonstrations.push_back(std::move(demo));
    }
    return bundle;
}

BlobLayout load_case_layout(const fs::path& dir, const std::string& id, const Canvas& canvas,
                            std::size_t max_blobs, std::string& note) {
    BlobLayout empty;
    empty.canvas = canvas;
    const fs::path json_path = dir / (id + ".json");
    if (fs::exists(json_path)) {
        std::ifstream f(json_path);
        return parse_json(std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()),
                          max_blobs);
    }
    for (const char* ext : {".css", ".txt"}) {
        const fs::path text_path = dir / (id + ext);
        if (!fs::exists(text_path)) continue;
        std::ifstream f(text_path);
        const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        try {
            return parse_css(text, canvas, max_blobs).layout;
        } catch (const ParseError&) {
            note = "layout unparseable";
            return empty;
        }
    }
    note = "layout missing";
    return empty;
}

service::HttpServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"blobkit: ellipse blob layouts, fitting, attention masks and evaluation", "blobkit"};
    app.require_subcommand(1);

    std::string config_file;
    app.add_option("--config", config_file, "Key-value config file");
    service::Settings flags;
    auto add_setting_flag = [&flags](CLI::App* cmd, const std::string& name, const std::string& key,
                                     const std::string& help) {
        cmd->add_option_function<std::string>(
            name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    add_setting_flag(&app, "--canvas-width", "canvas.width", "Canvas width in pixels");
    add_setting_flag(&app, "--canvas-height", "canvas.height", "Canvas height in pixels");
    add_setting_flag(&app, "--max-blobs", "max_blobs", "Maximum blobs per layout");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit an ellipse to each PGM mask; JSON FitResult out");
    std::vector<std::string> fit_inputs;
    fit_cmd->add_option("masks", fit_inputs, "PGM mask files ('-' for stdin)")->required();
    add_setting_flag(fit_cmd, "--max-iterations", "fit.max_iterations", "Optimizer iteration budget");
    add_setting_flag(fit_cmd, "--tolerance", "fit.iou_tolerance", "Stop when simplex IOU spread is below this");
    add_setting_flag(fit_cmd, "--raster-scale", "fit.raster_scale", "Objective resolution fraction");
    bool no_refine = false;
    fit_cmd->add_flag("--no-refine", no_refine, "Return the moment initialization");

    // rasterize
    auto* raster_cmd = app.add_subcommand("rasterize", "Layout JSON to PGM masks");
    std::string raster_input;
    std::string raster_dir;
    std::string raster_combined;
    raster_cmd->add_option("layout", raster_input, "Layout JSON file")->required();
    auto* dir_opt = raster_cmd->add_option("--out-dir", raster_dir, "Write blob_<i>.pgm per blob");
    auto* comb_opt = raster_cmd->add_option("--combined", raster_combined,
                                            "Write the union of all blobs to this PGM ('-' for stdout)");
    dir_opt->excludes(comb_opt);

    // render
    auto* render_cmd = app.add_subcommand("render", "Layout JSON to SVG overlay");
    std::string render_input;
    std::string render_output;
    render_cmd->add_option("layout", render_input, "Layout JSON file")->required();
    render_cmd->add_option("-o,--output", render_output, "SVG output path (default stdout)");

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "CSS layout text to layout JSON");
    std::string parse_input;
    std::string parse_desc;
    std::string parse_caption;
    parse_cmd->add_option("input", parse_input, "CSS layout text ('-' for stdin)")->required();
    parse_cmd->add_option("--descriptions", parse_desc, "Description blocks to pair by category");
    parse_cmd->add_option("--caption", parse_caption, "Global caption");

    // serialize
    auto* ser_cmd = app.add_subcommand("serialize", "Layout JSON to CSS or description text");
    std::string ser_input;
    std::string ser_format = "css";
    ser_cmd->add_option("layout", ser_input, "Layout JSON file")->required();
    ser_cmd->add_option("--format", ser_format, "css | desc")->check(CLI::IsMember({"css", "desc"}));

    // prompts
    auto* pp_cmd = app.add_subcommand("prompt-param", "Prompt bundle JSON to parameter prompt text");
    auto* pd_cmd = app.add_subcommand("prompt-desc", "Prompt bundle JSON to description prompt text");
    std::string bundle_input;
    pp_cmd->add_option("bundle", bundle_input, "Prompt bundle JSON")->required();
    pd_cmd->add_option("bundle", bundle_input, "Prompt bundle JSON")->required();

    // attention-demo
    auto* attn_cmd = app.add_subcommand("attention-demo", "Attention bundle JSON to output JSON");
    std::string attn_input;
    attn_cmd->add_option("bundle", attn_input, "Attention bundle JSON")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score layouts against a JSONL benchmark");
    std::string eval_bench;
    std::string eval_layouts;
    eval_cmd->add_option("--bench", eval_bench, "Benchmark JSONL file")->required();
    eval_cmd->add_option("--layouts", eval_layouts, "Directory of <id>.json / <id>.css layouts")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP layout service");
    add_setting_flag(serve_cmd, "--listen", "listen_address", "host:port");
    add_setting_flag(serve_cmd, "--data-dir", "data_dir", "Record directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        service::AppConfig config = service::resolve_config(
            config_file.empty() ? service::Settings{} : service::read_config_file(config_file),
            service::settings_from_environment([](const char* name) { return std::getenv(name); }), flags);
        if (no_refine) config.fit.refine = false;
        const std::size_t max_blobs = config.max_blobs;

        if (*fit_cmd) {
            std::vector<std::future<FitResult>> jobs;
            std::vector<FitResult> results(fit_inputs.size());
            if (fit_inputs.size() == 1) {
                results[0] = fit_ellipse(decode_pgm(read_input(fit_inputs[0], in)), config.fit);
                out << to_json(results[0]).dump(2) << "\n";
                return kExitOk;
            }
            const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
            std::vector<BinaryMask> masks;
            for (const auto& path : fit_inputs) masks.push_back(decode_pgm(read_input(path, in)));
            for (std::size_t start = 0; start < masks.size(); start += workers) {
                const std::size_t stop = std::min(masks.size(), start + workers);
                for (std::size_t i = start; i < stop; ++i) {
                    jobs.push_back(std::async(std::launch::async,
                                              [&, i] { return fit_ellipse(masks[i], config.fit); }));
                }
                for (std::size_t i = start; i < stop; ++i) results[i] = jobs[i].get();
            }
            json arr = json::array();
            for (std::size_t i = 0; i < results.size(); ++i) {
                json entry = to_json(results[i]);
                entry["input"] = fit_inputs[i];
                arr.push_back(std::move(entry));
            }
            out << arr.dump(2) << "\n";
            return kExitOk;
        }

        if (*raster_cmd) {
            const BlobLayout layout = layout_from_json(read_json(raster_input, in), max_blobs);
            if (!raster_dir.empty()) {
                fs::create_directories(raster_dir);
                json written = json::array();
                for (std::size_t i = 0; i < layout.blobs.size(); ++i) {
                    const fs::path p = fs::path(raster_dir) / ("blob_" + std::to_string(i) + ".pgm");
                    const BinaryMask m = rasterize(layout.blobs[i].parameter, layout.canvas);
                    write_pgm(p, m);
                    written.push_back({{"index", i}, {"path", p.string()}, {"foreground", m.count()}});
                }
                out << written.dump(2) << "\n";
                return kExitOk;
            }
            BinaryMask combined(layout.canvas.width, layout.canvas.height);
            for (const Blob& b : layout.blobs) {
                const BinaryMask m = rasterize(b.parameter, layout.canvas);
                std::vector<std::uint8_t> bits = combined.bits();
                for (std::size_t k = 0; k < bits.size(); ++k) bits[k] |= m.bits()[k];
                combined = BinaryMask(combined.width(), combined.height(), std::move(bits));
            }
            write_output(raster_combined.empty() ? "-" : raster_combined, encode_pgm(combined), out);
            return kExitOk;
        }

        if (*render_cmd) {
            write_output(render_output,
                         render_svg(layout_from_json(read_json(render_input, in), max_blobs)), out);
            return kExitOk;
        }

        if (*parse_cmd) {
            const CssParseResult parsed = parse_css(read_input(parse_input, in), config.default_canvas, max_blobs);
            for (const auto& r : parsed.rejects) {
                err << "rejected line " << r.line_number << ": " << r.reason << ": " << r.text << "\n";
            }
            for (const auto& w : parsed.warnings) {
                err << "warning line " << w.line_number << ": " << w.message << "\n";
            }
            BlobLayout layout = parsed.layout;
            layout.global_caption = parse_caption;
            if (!parse_desc.empty()) {
                const DescriptionParseResult desc = parse_descriptions(read_input(parse_desc, in));
                for (const auto& r : desc.rejects) {
                    err << "rejected description at line " << r.line_number << ": " << r.reason << "\n";
                }
                const PairingResult paired = attach_descriptions(layout, desc.lines);
                for (const auto& d : paired.unmatched_descriptions) {
                    err << "unmatched description for category '" << d.category << "'\n";
                }
                for (std::size_t i : paired.blobs_without_description) {
                    err << "blob " << i << " has no description\n";
                }
                layout = paired.layout;
            }
            out << layout_json(layout);
            return kExitOk;
        }

        if (*ser_cmd) {
            const BlobLayout layout = layout_from_json(read_json(ser_input, in), max_blobs);
            out << (ser_format == "css" ? serialize_css(layout) : serialize_descriptions(layout));
            return kExitOk;
        }

        if (*pp_cmd || *pd_cmd) {
            const json doc = read_json(bundle_input, in);
            const PromptBundle bundle = bundle_from_json(doc, max_blobs);
            if (*pp_cmd) {
                Canvas canvas = config.default_canvas;
                if (doc.contains("canvas")) {
                    canvas = Canvas{doc["canvas"].at("w").get<int>(), doc["canvas"].at("h").get<int>()};
                }
                out << build_parameter_prompt(bundle, canvas);
            } else {
                out << build_description_prompt(bundle);
            }
            return kExitOk;
        }

        if (*attn_cmd) {
            const AttentionBundle bundle = attention_bundle_from_json(read_json(attn_input, in));
            const AttentionResult result = cross_attention(bundle.grid, bundle.blobs, bundle.masked);
            out << attention_result_to_json(result).dump(2) << "\n";
            return kExitOk;
        }

        if (*eval_cmd) {
            const auto cases = parse_benchmark_jsonl(read_input(eval_bench, in));
            std::vector<CaseResult> results;
            for (const BenchmarkCase& bench : cases) {
                std::string note;
                const BlobLayout layout =
                    load_case_layout(eval_layouts, bench.id, config.default_canvas, max_blobs, note);
                CaseResult r = score_case(bench, layout);
                if (!note.empty()) r.detail = note + "; " + r.detail;
                results.push_back(std::move(r));
            }
            out << to_json(aggregate(results)).dump(2) << "\n";
            return kExitOk;
        }

        if (*serve_cmd) {
            service::LayoutStore store({fs::path(config.data_dir), config.max_blobs});
            for (const auto& w : store.load_warnings()) err << "warning: " << w << "\n";
            service::Api api(config, store);
            service::HttpServer server(api);
            const int port = server.bind(config.host(), config.port());
            err << "listening on " << config.host() << ":" << port << "\n";
            g_server = &server;
            std::signal(SIGINT, handle_stop_signal);
            std::signal(SIGTERM, handle_stop_signal);
            server.serve();
            g_server = nullptr;
            return kExitOk;
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what();
        if (!e.path().empty()) err << " (at " << e.path() << ")";
        err << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (const auto& r : e.rejects()) {
            err << "  line " << r.line_number << ": " << r.reason << ": " << r.text << "\n";
        }
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace blobkit
