#pragma once

#include "blobkit/geometry.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace blobkit {

/// Expected object count per category.
struct NumericalSpec {
    std::map<std::string, int> counts;

    void validate() const;
};

enum class SpatialRelation { LeftOf, RightOf, Above, Below };

std::string to_string(SpatialRelation relation);
SpatialRelation spatial_relation_from_string(const std::string& text);

struct SpatialSpec {
    std::string subject;
    SpatialRelation relation = SpatialRelation::LeftOf;
    std::string object;
};

struct CaseResult {
    std::string case_id;
    std::optional<double> precision;  // numerical cases only
    std::optional<double> recall;     // numerical cases only
    bool accurate = false;
    std::string detail;
};

struct MetricsReport {
    std::size_t n_cases = 0;
    std::optional<double> mean_precision;
    std::optional<double> mean_recall;
    double accuracy = 0.0;
    std::vector<CaseResult> per_case;
};

/// Count-based precision/recall/exact-accuracy of a layout against the
/// prompted per-category counts. Categories match after normalize_category.
CaseResult score_numerical(const NumericalSpec& spec, const BlobLayout& layout,
                           std::string case_id = {});

/// Center comparison between the first subject blob and the first object
/// blob (y grows downward). Ties and absent categories fail.
CaseResult score_spatial(const SpatialSpec& spec, const BlobLayout& layout,
                         std::string case_id = {});

struct MiouReport {
    double mean = 0.0;
    std::vector<double> ious;
    /// Indices whose mask and ellipse were both empty; they score 0.
    std::vector<std::size_t> empty_union;
};

MiouReport controllability_miou(std::span<const std::pair<BinaryMask, BlobParameter>> pairs,
                                const Canvas& canvas);

/// Unweighted means. Precision and recall average numerical cases only.
MetricsReport aggregate(std::span<const CaseResult> results);

/// Detector output in center/size form.
struct DetectedBox {
    std::string category;
    double cx = 0.0;
    double cy = 0.0;
    double width = 0.0;
    double height = 0.0;
};

/// Turns boxes into axis-aligned inscribed ellipses so detector output can
/// go through the same scoring path as generated layouts.
BlobLayout layout_from_boxes(std::span<const DetectedBox> boxes, const Canvas& canvas);

// Benchmark JSON-lines: {"id", "type": "numerical"|"spatial", "spec", "caption"}
struct BenchmarkCase {
    std::string id;
    std::string caption;
    std::variant<NumericalSpec, SpatialSpec> spec;
};

BenchmarkCase benchmark_case_from_json(const nlohmann::json& doc);
std::vector<BenchmarkCase> parse_benchmark_jsonl(std::string_view text);

CaseResult score_case(const BenchmarkCase& bench, const BlobLayout& layout);

nlohmann::json to_json(const CaseResult& result);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace blobkit
