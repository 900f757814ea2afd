// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "blobkit/attention.hpp"
#include "blobkit/errors.hpp"
#include "blobkit/evaluation.hpp"
#include "blobkit/fitting.hpp"
#include "blobkit/geometry.hpp"
#include "blobkit/layout_text.hpp"
#include "blobkit/service/http_api.hpp"
#include "blobkit/service/store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace blobkit;
namespace fs = std::filesystem;

namespace {

// Best grid IOU printed by tests/oracles/rect_grid_oracle.py.
constexpr double kRectangleGridOracleIou = 0.836220;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

// ------------------------------------------------------------- attention

Matrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

struct AttentionInstance {
    FeatureGrid grid;
    std::vector<BlobTokens> blobs;
};

AttentionInstance random_instance(std::mt19937& rng, bool ones_masks) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    AttentionInstance inst;
    inst.grid.h = static_cast<std::size_t>(pick(1, 8));
    inst.grid.w = static_cast<std::size_t>(pick(1, 8));
    const std::size_t d = static_cast<std::size_t>(pick(1, 16));
    const std::size_t hw = inst.grid.locations();
    inst.grid.values = random_matrix(rng, hw, d);
    const int n = pick(1, 5);
    std::bernoulli_distribution coin(0.5);
    for (int b = 0; b < n; ++b) {
        const std::size_t l = static_cast<std::size_t>(pick(1, 8));
        BlobTokens t{random_matrix(rng, l, d), random_matrix(rng, l, d), {}};
        for (std::size_t i = 0; i < hw; ++i) t.mask.push_back(ones_masks || coin(rng) ? 1 : 0);
        inst.blobs.push_back(std::move(t));
    }
    return inst;
}

bool close_relative(const Matrix& a, const Matrix& b, double tol, double* worst) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    bool ok = true;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double x = a.data()[i], y = b.data()[i];
        const double err = std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-12});
        *worst = std::max(*worst, err);
        if (err > tol && std::abs(x - y) > 1e-15) ok = false;
    }
    return ok;
}

Outcome attention_equivalence() {
    std::mt19937 rng(1001);
    const auto start = Clock::now();
    double worst = 0.0;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const AttentionInstance inst = random_instance(rng, true);
        if (!close_relative(masked_cross_attention(inst.grid, inst.blobs),
                            standard_cross_attention(inst.grid, inst.blobs), 1e-6, &worst)) {
            ++failures;
        }
    }
    const double elapsed = seconds_since(start);
    return {failures == 0 && elapsed < 5.0,
            fmt("100 instances, %.0f mismatches, max rel err %.2e, %.3fs", failures, worst, elapsed)};
}

Outcome attention_locality() {
    std::mt19937 rng(2002);
    int violations = 0;
    std::size_t changed_inside = 0;
    for (int trial = 0; trial < 100; ++trial) {
        AttentionInstance inst = random_instance(rng, false);
        const Matrix before = masked_cross_attention(inst.grid, inst.blobs);
        const std::size_t victim = std::uniform_int_distribution<std::size_t>(0, inst.blobs.size() - 1)(rng);
        BlobTokens& t = inst.blobs[victim];
        t.keys = random_matrix(rng, t.keys.rows(), t.keys.cols());
        t.values = random_matrix(rng, t.values.rows(), t.values.cols());
        const Matrix after = masked_cross_attention(inst.grid, inst.blobs);
        for (std::size_t loc = 0; loc < inst.grid.locations(); ++loc) {
            const auto b = before.row(loc);
            const auto a = after.row(loc);
            const bool same = std::equal(b.begin(), b.end(), a.begin());
            if (t.mask[loc] == 0 && !same) ++violations;
            if (t.mask[loc] != 0 && !same) ++changed_inside;
        }
    }
    return {violations == 0 && changed_inside > 0,
            fmt("100 trials, %.0f changed rows outside the mask, %.0f changed rows inside", violations,
                static_cast<double>(changed_inside))};
}

Outcome attention_permutation() {
    std::mt19937 rng(3003);
    double worst = 0.0;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        AttentionInstance inst = random_instance(rng, false);
        const Matrix base = masked_cross_attention(inst.grid, inst.blobs);
        std::shuffle(inst.blobs.begin(), inst.blobs.end(), rng);
        if (!close_relative(masked_cross_attention(inst.grid, inst.blobs), base, 1e-6, &worst)) ++failures;
    }
    return {failures == 0, fmt("100 trials, %.0f failures, max rel err %.2e", failures, worst)};
}

// ------------------------------------------------------------- fitting

Outcome ellipse_self_reconstruction() {
    std::mt19937 rng(4004);
    std::uniform_real_distribution<double> radius(20.0, 200.0);
    std::uniform_real_distribution<double> angle(0.0, kPi);
    const Canvas canvas;
    const auto start = Clock::now();
    double sum = 0.0, lowest = 1.0;
    int done = 0;
    while (done < 50) {
        const double a = radius(rng), b = radius(rng), theta = angle(rng);
        // Half extents of the rotated ellipse's bounding box.
        const double ex = std::sqrt(a * a * std::cos(theta) * std::cos(theta) + b * b * std::sin(theta) * std::sin(theta));
        const double ey = std::sqrt(a * a * std::sin(theta) * std::sin(theta) + b * b * std::cos(theta) * std::cos(theta));
        if (2 * ex >= canvas.width || 2 * ey >= canvas.height) continue;
        const double cx = std::uniform_real_distribution<double>(ex, canvas.width - ex)(rng);
        const double cy = std::uniform_real_distribution<double>(ey, canvas.height - ey)(rng);
        const FitResult r = fit_ellipse(rasterize(BlobParameter(cx, cy, a, b, theta), canvas));
        sum += r.iou;
        lowest = std::min(lowest, r.iou);
        ++done;
    }
    const double mean = sum / 50.0;
    const double elapsed = seconds_since(start);
    return {lowest >= 0.95 && mean >= 0.98 && elapsed < 60.0,
            fmt("min IOU %.4f, mean IOU %.4f, %.2fs", lowest, mean, elapsed)};
}

Outcome rectangle_oracle() {
    BinaryMask mask(512, 512);
    for (int y = 206; y < 306; ++y)
        for (int x = 156; x < 356; ++x) mask.set(x, y, true);
    const FitResult r = fit_ellipse(mask);
    return {r.iou >= kRectangleGridOracleIou - 0.01,
            fmt("fit IOU %.6f vs grid oracle %.6f", r.iou, kRectangleGridOracleIou)};
}

// ------------------------------------------------------------- geometry

Outcome geometry_oracle() {
    const double r = 100.0, d = 100.0;
    const double lens = 2 * r * r * std::acos(d / (2 * r)) - (d / 2) * std::sqrt(4 * r * r - d * d);
    const double analytic = lens / (2 * kPi * r * r - lens);
    const double iou = ellipse_iou(BlobParameter(206, 256, r, r, 0), BlobParameter(306, 256, r, r, 0), Canvas{});
    bool ok = std::abs(iou - 0.2430) <= 0.01 && std::abs(analytic - 0.2430) <= 0.001;

    std::mt19937 rng(5005);
    std::uniform_real_distribution<double> radius(20.0, 200.0);
    std::uniform_real_distribution<double> angle(0.0, kPi);
    double worst = 0.0;
    int checked = 0;
    while (checked < 30) {
        const double a = radius(rng), b = radius(rng), theta = angle(rng);
        const double ex = std::max(a, b), ey = ex;
        if (2 * ex >= 512) continue;
        const double cx = std::uniform_real_distribution<double>(ex, 512 - ex)(rng);
        const double cy = std::uniform_real_distribution<double>(ey, 512 - ey)(rng);
        const double area = static_cast<double>(rasterize(BlobParameter(cx, cy, a, b, theta), Canvas{}).count());
        worst = std::max(worst, std::abs(area - kPi * a * b) / (kPi * a * b));
        ++checked;
    }
    ok = ok && worst <= 0.02;
    return {ok, fmt("lens IOU %.4f (analytic %.4f), worst area error %.4f over 30 ellipses", iou, analytic, worst)};
}

// ------------------------------------------------------------- layout text

Outcome css_round_trip() {
    std::mt19937 rng(6006);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const char* names[] = {"cat", "teddy-bear", "potted plant", "dog", "dining table", "car"};
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        BlobLayout layout;
        const int n = pick(1, 15);
        for (int i = 0; i < n; ++i) {
            const int b = pick(1, 512);
            const int a = pick(b, 512);
            const BlobParameter p(pick(0, 512), pick(0, 512), a, b, degrees_to_radians(pick(0, 179)));
            const std::string cat = names[pick(0, 5)];
            layout.blobs.push_back({p, cat, cat});
        }
        const CssParseResult parsed = parse_css(serialize_css(layout), layout.canvas);
        if (!(parsed.layout == layout) || !parsed.rejects.empty()) ++mismatches;
    }
    const CssParseResult teddy = parse_css(
        "teddy-bear {major-radius: 162px; minor-radius: 76px; cx: 444px; cy: 258px; angle: 96}", Canvas{});
    const BlobParameter& t = teddy.layout.blobs.at(0).parameter;
    const bool teddy_ok = t.cx() == 444 && t.cy() == 258 && t.a() == 162 && t.b() == 76 &&
                          std::abs(radians_to_degrees(t.theta()) - 96.0) < 1e-9;
    return {mismatches == 0 && teddy_ok,
            fmt("200 layouts, %.0f mismatches; teddy-bear line ", mismatches) + (teddy_ok ? "exact" : "WRONG")};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome prompt_fidelity() {
    PromptBundle bundle;
    bundle.demonstrations.push_back(
        {"a teddy bear to the right of a cat",
         std::string("teddy-bear {major-radius: 162px; minor-radius: 76px; cx: 444px; cy: 258px; angle: 96}\n"
                     "cat {major-radius: 137px; minor-radius: 116px; cx: 149px; 236cy: ?px; angle: 3}\n")});
    bundle.test_caption = "a teddy bear to the left of a bed";
    const std::string golden = read_text(fs::path(BLOBKIT_TEST_DATA) / "param_prompt_golden.txt");
    const std::string built = build_parameter_prompt(bundle, Canvas{});
    if (golden.empty()) return {false, "golden file missing"};
    if (built == golden) return {true, fmt("%.0f bytes identical to golden", static_cast<double>(golden.size()))};
    const auto diff = std::mismatch(built.begin(), built.end(), golden.begin(), golden.end());
    return {false, fmt("first difference at byte %.0f", static_cast<double>(diff.first - built.begin()))};
}

// ------------------------------------------------------------- evaluation

Outcome evaluation_fixtures() {
    auto cats = [](int n) {
        BlobLayout l;
        for (int i = 0; i < n; ++i) l.blobs.push_back({BlobParameter(60.0 + 80 * i, 100, 30, 20, 0), "cat", "cat"});
        return l;
    };
    std::vector<std::string> failed;
    const CaseResult three = score_numerical({{{"cat", 2}}}, cats(3));
    if (!(std::abs(*three.precision - 2.0 / 3.0) < 1e-12 && *three.recall == 1.0 && !three.accurate))
        failed.push_back("3-vs-2 cats");
    const CaseResult dog = score_numerical({{{"cat", 2}, {"dog", 1}}}, cats(2));
    if (!(*dog.precision == 1.0 && std::abs(*dog.recall - 2.0 / 3.0) < 1e-12 && !dog.accurate))
        failed.push_back("missing dog");

    BlobLayout tie;
    tie.blobs.push_back({BlobParameter(200, 100, 30, 20, 0), "cat", "cat"});
    tie.blobs.push_back({BlobParameter(200, 300, 30, 20, 0), "bed", "bed"});
    const CaseResult t = score_spatial({"cat", SpatialRelation::LeftOf, "bed"}, tie);
    if (t.accurate || t.detail.find("tie") == std::string::npos) failed.push_back("tie");
    BlobLayout only_cat;
    only_cat.blobs.push_back(tie.blobs[0]);
    const CaseResult m = score_spatial({"cat", SpatialRelation::LeftOf, "bed"}, only_cat);
    if (m.accurate || m.detail.find("object category absent") == std::string::npos) failed.push_back("missing");

    const std::vector<CaseResult> two{score_numerical({{{"cat", 2}}}, cats(2)), three};
    const MetricsReport report = aggregate(two);
    if (report.accuracy != 0.5) failed.push_back("aggregate");

    std::string detail = "aggregate accuracy " + fmt("%.4f", report.accuracy);
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

// ------------------------------------------------------------- service

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path = fs::temp_directory_path() / ("blobkit_accept_" + tag + "_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct InjectedCrash {};

Outcome service_integrity() {
    using service::LayoutStore;
    std::vector<std::string> failed;
    BlobLayout layout;
    layout.global_caption = "a teddy bear to the right of a cat";
    layout.blobs.push_back({BlobParameter(444, 258, 162, 76, degrees_to_radians(96)), "teddy-bear", "teddy-bear"});
    layout.blobs.push_back({BlobParameter(149, 236, 137, 116, degrees_to_radians(3)), "cat", "cat"});

    {
        ScratchDir dir("restart");
        std::string id;
        BlobLayout expected;
        {
            LayoutStore store({dir.path, kDefaultMaxBlobs});
            id = store.create(layout).id;
            expected = store.apply_edit(id, edit::Move{0, 300, 120}, 1).layout;
            expected = store.apply_edit(id, edit::SetDescription{1, "a tabby cat"}, 2).layout;
        }
        LayoutStore reopened({dir.path, kDefaultMaxBlobs});
        const auto r = reopened.get(id);
        if (!r || r->layout != expected || r->revision != 3) failed.push_back("restart round-trip");

        const service::Api api(service::AppConfig{}, reopened);
        const nlohmann::json put = {{"revision", 1}, {"layout", layout_to_json(layout)}};
        const service::ApiResponse stale = api.handle({"PUT", "/layouts/" + id, {}, put.dump()});
        if (stale.status != 409 || reopened.get(id)->revision != 3) failed.push_back("stale revision");
    }

    int corrupt = 0;
    for (const char* stage : {"mid_write", "before_rename", "after_rename"}) {
        ScratchDir dir("crash");
        std::string id;
        {
            LayoutStore store({dir.path, kDefaultMaxBlobs});
            id = store.create(layout).id;
            store.set_fault_hook([stage](std::string_view s) {
                if (s == stage) throw InjectedCrash{};
            });
            try {
                store.apply_edit(id, edit::Remove{0}, 1);
            } catch (const InjectedCrash&) {
            }
        }
        LayoutStore reopened({dir.path, kDefaultMaxBlobs});
        const auto r = reopened.get(id);
        const bool readable = r && reopened.load_warnings().empty();
        const bool old_state = r && r->revision == 1 && r->layout == layout;
        const bool new_state = r && r->revision == 2 && r->layout == edit_layout(layout, edit::Remove{0});
        if (!readable || !(old_state || new_state)) ++corrupt;
    }
    if (corrupt) failed.push_back("crash injection");

    std::string detail = "restart round-trip, PUT with stale revision -> 409, 3 crash stages";
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"masked-attention equivalence", attention_equivalence},
        {"masked-attention locality", attention_locality},
        {"blob-permutation invariance", attention_permutation},
        {"ellipse-fit self-reconstruction", ellipse_self_reconstruction},
        {"rectangle-fit oracle", rectangle_oracle},
        {"geometry oracle", geometry_oracle},
        {"css round-trip", css_round_trip},
        {"prompt fidelity", prompt_fidelity},
        {"evaluation fixtures", evaluation_fixtures},
        {"service integrity", service_integrity},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        if (!outcome.pass) ++failures;
        std::printf("%s  %-34s %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
