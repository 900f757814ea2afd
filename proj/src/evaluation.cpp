#include "blobkit/evaluation.hpp"

#include "blobkit/errors.hpp"
#include "blobkit/layout_text.hpp"

#include <algorithm>
#include <cmath>

namespace blobkit {

using nlohmann::json;

void NumericalSpec::validate() const {
    if (counts.empty()) throw InvalidArgument("numerical spec needs at least one category", "spec");
    for (const auto& [category, n] : counts) {
        if (n < 1) throw InvalidArgument("count for '" + category + "' must be >= 1", "spec." + category);
    }
}

std::string to_string(SpatialRelation relation) {
    switch (relation) {
        case SpatialRelation::LeftOf: return "left-of";
        case SpatialRelation::RightOf: return "right-of";
        case SpatialRelation::Above: return "above";
        case SpatialRelation::Below: return "below";
    }
    return "left-of";
}

SpatialRelation spatial_relation_from_string(const std::string& text) {
    const std::string key = normalize_category(text);
    if (key == "left of" || key == "left") return SpatialRelation::LeftOf;
    if (key == "right of" || key == "right") return SpatialRelation::RightOf;
    if (key == "above" || key == "top of") return SpatialRelation::Above;
    if (key == "below" || key == "under" || key == "bottom of") return SpatialRelation::Below;
    throw InvalidArgument("unknown spatial relation '" + text + "'", "spec.relation");
}

CaseResult score_numerical(const NumericalSpec& spec, const BlobLayout& layout,
                           std::string case_id) {
    spec.validate();
    std::map<std::string, int> expected;
    for (const auto& [category, n] : spec.counts) expected[normalize_category(category)] += n;
    std::map<std::string, int> generated;
    for (const Blob& b : layout.blobs) ++generated[normalize_category(b.category)];

    int matched = 0;
    int expected_total = 0;
    bool accurate = true;
    std::string detail;
    for (const auto& [category, n] : expected) {
        const auto it = generated.find(category);
        const int got = it == generated.end() ? 0 : it->second;
        matched += std::min(got, n);
        expected_total += n;
        if (got != n) {
            accurate = false;
            detail += (detail.empty() ? "" : "; ") + category + ": expected " + std::to_string(n) +
                      ", got " + std::to_string(got);
        }
    }
    int generated_total = 0;
    for (const auto& [category, n] : generated) {
        generated_total += n;
        if (!expected.count(category)) {
            accurate = false;
            detail += (detail.empty() ? "" : "; ") + std::string("extra category ") + category;
        }
    }

    CaseResult r;
    r.case_id = std::move(case_id);
    r.precision = generated_total == 0 ? 0.0 : static_cast<double>(matched) / generated_total;
    r.recall = static_cast<double>(matched) / expected_total;
    r.accurate = accurate;
    r.detail = accurate ? "counts match" : detail;
    return r;
}

CaseResult score_spatial(const SpatialSpec& spec, const BlobLayout& layout, std::string case_id) {
    CaseResult r;
    r.case_id = std::move(case_id);
    const std::string subject = normalize_category(spec.subject);
    const std::string object = normalize_category(spec.object);
    const bool same = subject == object;

    const Blob* subject_blob = nullptr;
    const Blob* object_blob = nullptr;
    for (const Blob& b : layout.blobs) {
        const std::string key = normalize_category(b.category);
        if (key == subject && !subject_blob) {
            subject_blob = &b;
        } else if (key == object && !object_blob) {
            object_blob = &b;
        }
    }
    const std::string prefix = same ? "subject and object share a category; " : "";
    if (!subject_blob) {
        r.detail = prefix + "subject category absent";
        return r;
    }
    if (!object_blob) {
        r.detail = prefix + "object category absent";
        return r;
    }

    const BlobParameter& s = subject_blob->parameter;
    const BlobParameter& o = object_blob->parameter;
    double lhs = 0.0;
    double rhs = 0.0;
    switch (spec.relation) {
        case SpatialRelation::LeftOf: lhs = s.cx(); rhs = o.cx(); break;
        case SpatialRelation::RightOf: lhs = o.cx(); rhs = s.cx(); break;
        case SpatialRelation::Above: lhs = s.cy(); rhs = o.cy(); break;
        case SpatialRelation::Below: lhs = o.cy(); rhs = s.cy(); break;
    }
    if (lhs == rhs) {
        r.detail = prefix + "tie";
    } else {
        r.accurate = lhs < rhs;
        r.detail = prefix + (r.accurate ? "relation satisfied" : "relation violated");
    }
    return r;
}

MiouReport controllability_miou(std::span<const std::pair<BinaryMask, BlobParameter>> pairs,
                                const Canvas& canvas) {
    canvas.validate();
    if (pairs.empty()) throw InvalidArgument("controllability mIOU needs at least one pair", "pairs");
    MiouReport report;
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [mask, param] = pairs[i];
        if (mask.width() != canvas.width || mask.height() != canvas.height) {
            throw InvalidArgument("mask " + std::to_string(i) + " does not match the canvas size",
                                  "pairs[" + std::to_string(i) + "]");
        }
        double iou = 0.0;
        try {
            iou = mask_iou(mask, rasterize(param, canvas));
        } catch (const DegenerateInput&) {
            report.empty_union.push_back(i);
        }
        report.ious.push_back(iou);
        sum += iou;
    }
    report.mean = sum / static_cast<double>(pairs.size());
    return report;
}

MetricsReport aggregate(std::span<const CaseResult> results) {
    if (results.empty()) throw InvalidArgument("cannot aggregate zero cases", "results");
    MetricsReport report;
    report.n_cases = results.size();
    std::size_t accurate = 0;
    std::size_t numerical = 0;
    double precision = 0.0;
    double recall = 0.0;
    for (const CaseResult& r : results) {
        if (r.accurate) ++accurate;
        if (r.precision && r.recall) {
            ++numerical;
            precision += *r.precision;
            recall += *r.recall;
        }
        report.per_case.push_back(r);
    }
    report.accuracy = static_cast<double>(accurate) / static_cast<double>(results.size());
    if (numerical > 0) {
        report.mean_precision = precision / static_cast<double>(numerical);
        report.mean_recall = recall / static_cast<double>(numerical);
    }
    return report;
}

BlobLayout layout_from_boxes(std::span<const DetectedBox> boxes, const Canvas& canvas) {
    canvas.validate();
    BlobLayout layout;
    layout.canvas = canvas;
    for (const DetectedBox& box : boxes) {
        Blob blob;
        blob.category = box.category;
        blob.description = box.category;
        // The constructor turns a tall box into a pi/2-rotated ellipse.
        blob.parameter = BlobParameter(box.cx, box.cy, box.width / 2.0, box.height / 2.0, 0.0);
        blob.validate();
        layout.blobs.push_back(std::move(blob));
    }
    return layout;
}

BenchmarkCase benchmark_case_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("benchmark case must be a JSON object");
    auto field = [&](const char* key) -> const json& {
        const auto it = doc.find(key);
        if (it == doc.end()) throw ParseError(std::string("missing field: ") + key, {}, key);
        return *it;
    };
    BenchmarkCase bench;
    const json& id = field("id");
    bench.id = id.is_string() ? id.get<std::string>() : id.dump();
    if (doc.contains("caption") && doc["caption"].is_string()) bench.caption = doc["caption"];
    const json& type = field("type");
    const json& spec = field("spec");
    if (!type.is_string() || !spec.is_object()) throw ParseError("invalid benchmark case " + bench.id);

    if (type == "numerical") {
        const json& counts = spec.contains("counts") ? spec["counts"] : spec;
        NumericalSpec numerical;
        for (const auto& [category, n] : counts.items()) {
            if (!n.is_number_integer()) {
                throw ParseError("invalid type at spec." + category + ": expected integer", {},
                                 "spec." + category);
            }
            numerical.counts[category] = n.get<int>();
        }
        numerical.validate();
        bench.spec = std::move(numerical);
    } else if (type == "spatial") {
        SpatialSpec spatial;
        for (const char* key : {"subject", "relation", "object"}) {
            if (!spec.contains(key) || !spec[key].is_string()) {
                throw ParseError(std::string("missing field: spec.") + key, {}, std::string("spec.") + key);
            }
        }
        spatial.subject = spec["subject"];
        spatial.object = spec["object"];
        spatial.relation = spatial_relation_from_string(spec["relation"]);
        bench.spec = std::move(spatial);
    } else {
        throw ParseError("unknown case type '" + type.get<std::string>() + "'", {}, "type");
    }
    return bench;
}

std::vector<BenchmarkCase> parse_benchmark_jsonl(std::string_view text) {
    std::vector<BenchmarkCase> cases;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            cases.push_back(benchmark_case_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw ParseError("benchmark line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError("benchmark line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cases;
}

CaseResult score_case(const BenchmarkCase& bench, const BlobLayout& layout) {
    if (const auto* numerical = std::get_if<NumericalSpec>(&bench.spec)) {
        return score_numerical(*numerical, layout, bench.id);
    }
    return score_spatial(std::get<SpatialSpec>(bench.spec), layout, bench.id);
}

json to_json(const CaseResult& r) {
    json out = {{"case_id", r.case_id}, {"accurate", r.accurate}, {"detail", r.detail}};
    out["precision"] = r.precision ? json(*r.precision) : json(nullptr);
    out["recall"] = r.recall ? json(*r.recall) : json(nullptr);
    return out;
}

json to_json(const MetricsReport& report) {
    json cases = json::array();
    for (const CaseResult& r : report.per_case) cases.push_back(to_json(r));
    json out = {{"n_cases", report.n_cases}, {"accuracy", report.accuracy}, {"per_case", cases}};
    out["mean_precision"] = report.mean_precision ? json(*report.mean_precision) : json(nullptr);
    out["mean_recall"] = report.mean_recall ? json(*report.mean_recall) : json(nullptr);
    return out;
}

}  // namespace blobkit
