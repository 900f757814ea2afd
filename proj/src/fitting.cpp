#include "blobkit/fitting.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace blobkit {

void FitConfig::validate() const {
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1", "max_iterations");
    if (!(raster_scale > 0.0 && raster_scale <= 1.0)) {
        throw InvalidArgument("raster_scale must be in (0, 1]", "raster_scale");
    }
    if (!(iou_tolerance >= 0.0)) throw InvalidArgument("iou_tolerance must be >= 0", "iou_tolerance");
}

BlobParameter moment_init(const BinaryMask& mask) {
    const std::size_t n = mask.count();
    if (n < 5) {
        throw DegenerateInput("mask has " + std::to_string(n) +
                              " foreground pixels; at least 5 are required");
    }
    double sx = 0.0;
    double sy = 0.0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y)) {
                sx += x + 0.5;
                sy += y + 0.5;
            }
        }
    }
    const double cx = sx / static_cast<double>(n);
    const double cy = sy / static_cast<double>(n);

    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y)) {
                const double dx = x + 0.5 - cx;
                const double dy = y + 0.5 - cy;
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
            }
        }
    }
    sxx /= static_cast<double>(n);
    syy /= static_cast<double>(n);
    sxy /= static_cast<double>(n);

    const double mean = 0.5 * (sxx + syy);
    const double radius = std::hypot(0.5 * (sxx - syy), sxy);
    const double lambda1 = mean + radius;
    const double lambda2 = mean - radius;
    if (!(lambda2 > 1e-6)) {
        throw DegenerateInput("foreground pixels are collinear (zero-variance direction)");
    }
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    // A uniform ellipse with semi-axes a, b has second moments a^2/4, b^2/4.
    return BlobParameter(cx, cy, 2.0 * std::sqrt(lambda1), 2.0 * std::sqrt(lambda2), theta);
}

IouObjective::IouObjective(const BinaryMask& mask)
    : canvas_{mask.width(), mask.height()} {
    canvas_.validate();
    const auto w = static_cast<std::size_t>(mask.width());
    row_prefix_.assign((w + 1) * static_cast<std::size_t>(mask.height()), 0);
    for (int y = 0; y < mask.height(); ++y) {
        std::uint32_t* row = row_prefix_.data() + static_cast<std::size_t>(y) * (w + 1);
        for (int x = 0; x < mask.width(); ++x) {
            row[x + 1] = row[x] + (mask.at(x, y) ? 1u : 0u);
        }
        foreground_ += row[w];
    }
}

double IouObjective::operator()(const BlobParameter& p) const {
    const auto spans = row_spans(p, canvas_);
    const auto w = static_cast<std::size_t>(canvas_.width);
    std::size_t area = 0;
    std::size_t inter = 0;
    for (std::size_t y = 0; y < spans.size(); ++y) {
        const RowSpan& s = spans[y];
        if (s.length() == 0) continue;
        const std::uint32_t* row = row_prefix_.data() + y * (w + 1);
        area += static_cast<std::size_t>(s.length());
        inter += row[s.end] - row[s.begin];
    }
    const std::size_t uni = area + foreground_ - inter;
    if (uni == 0) throw DegenerateInput("IOU of two empty masks is undefined");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

using Vertex = std::array<double, 5>;

Vertex to_vertex(const BlobParameter& p) { return {p.cx(), p.cy(), p.a(), p.b(), p.theta()}; }

BlobParameter to_parameter(const Vertex& v, double scale = 1.0) {
    constexpr double kMinRadius = 0.5;
    return BlobParameter(v[0] * scale, v[1] * scale, std::max(std::abs(v[2]), kMinRadius) * scale,
                         std::max(std::abs(v[3]), kMinRadius) * scale, v[4]);
}

BinaryMask downscale(const BinaryMask& mask, double scale) {
    const int w = std::max(1, static_cast<int>(std::lround(mask.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(mask.height() * scale)));
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) / scale));
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) / scale));
            out.set(x, y, mask.at(sx, sy));
        }
    }
    return out;
}

// Nelder-Mead over a piecewise-constant objective, tracking the best
// candidate ever evaluated. Ties keep the earliest.
class SimplexSearch {
public:
    SimplexSearch(const IouObjective& objective, double scale)
        : objective_(objective), scale_(scale) {}

    double evaluate(const Vertex& v) {
        const double iou = objective_(to_parameter(v, scale_));
        if (iou > best_iou_) {
            best_iou_ = iou;
            best_ = v;
        }
        return iou;
    }

    std::size_t run(const Vertex& start, const FitConfig& config) {
        constexpr double kReflect = 1.0;
        constexpr double kExpand = 2.0;
        constexpr double kContract = 0.5;
        constexpr double kShrink = 0.5;
        constexpr std::size_t kDim = 5;

        const std::array<double, kDim> steps = {
            std::max(0.1 * start[2], 2.0), std::max(0.1 * start[2], 2.0),
            std::max(0.1 * start[2], 2.0), std::max(0.1 * start[3], 2.0),
            std::max(0.1 * (kPi / 2.0), 0.05)};

        std::array<Vertex, kDim + 1> simplex;
        std::array<double, kDim + 1> iou{};
        simplex[0] = start;
        iou[0] = evaluate(start);
        for (std::size_t k = 0; k < kDim; ++k) {
            simplex[k + 1] = start;
            simplex[k + 1][k] += steps[k];
            iou[k + 1] = evaluate(simplex[k + 1]);
        }

        std::array<std::size_t, kDim + 1> order{};
        std::size_t iterations = 0;
        while (iterations < config.max_iterations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t l, std::size_t r) { return iou[l] > iou[r]; });
            {
                std::array<Vertex, kDim + 1> sorted_v;
                std::array<double, kDim + 1> sorted_f{};
                for (std::size_t k = 0; k <= kDim; ++k) {
                    sorted_v[k] = simplex[order[k]];
                    sorted_f[k] = iou[order[k]];
                }
                simplex = sorted_v;
                iou = sorted_f;
            }
            if (iou[0] - iou[kDim] < config.iou_tolerance) break;
            ++iterations;

            Vertex centroid{};
            for (std::size_t k = 0; k < kDim; ++k) {
                for (std::size_t d = 0; d < kDim; ++d) centroid[d] += simplex[k][d] / kDim;
            }
            auto along = [&](const Vertex& from, double t) {
                Vertex out;
                for (std::size_t d = 0; d < kDim; ++d) {
                    out[d] = centroid[d] + t * (from[d] - centroid[d]);
                }
                return out;
            };

            const Vertex& worst = simplex[kDim];
            const Vertex reflected = along(worst, -kReflect);
            const double f_reflected = evaluate(reflected);
            if (f_reflected > iou[0]) {
                const Vertex expanded = along(worst, -kReflect * kExpand);
                const double f_expanded = evaluate(expanded);
                if (f_expanded > f_reflected) {
                    simplex[kDim] = expanded;
                    iou[kDim] = f_expanded;
                } else {
                    simplex[kDim] = reflected;
                    iou[kDim] = f_reflected;
                }
                continue;
            }
            if (f_reflected > iou[kDim - 1]) {
                simplex[kDim] = reflected;
                iou[kDim] = f_reflected;
                continue;
            }
            const bool outside = f_reflected > iou[kDim];
            const Vertex contracted =
                outside ? along(worst, -kReflect * kContract) : along(worst, kContract);
            const double f_contracted = evaluate(contracted);
            if (outside ? f_contracted >= f_reflected : f_contracted > iou[kDim]) {
                simplex[kDim] = contracted;
                iou[kDim] = f_contracted;
                continue;
            }
            for (std::size_t k = 1; k <= kDim; ++k) {
                for (std::size_t d = 0; d < kDim; ++d) {
                    simplex[k][d] = simplex[0][d] + kShrink * (simplex[k][d] - simplex[0][d]);
                }
                iou[k] = evaluate(simplex[k]);
            }
        }
        return iterations;
    }

    const Vertex& best() const { return best_; }
    double best_iou() const { return best_iou_; }

private:
    const IouObjective& objective_;
    double scale_;
    Vertex best_{};
    double best_iou_ = -1.0;
};

}  // namespace

FitResult fit_ellipse(const BinaryMask& mask, const FitConfig& config) {
    config.validate();
    const BlobParameter initial = moment_init(mask);
    const IouObjective full(mask);

    FitResult result;
    result.parameter = initial;
    result.initial_iou = full(initial);
    result.iou = result.initial_iou;
    if (!config.refine) return result;

    if (config.raster_scale >= 1.0) {
        SimplexSearch search(full, 1.0);
        result.iterations_used = search.run(to_vertex(initial), config);
        const BlobParameter best = to_parameter(search.best());
        if (search.best_iou() > result.iou) {
            result.parameter = best;
            result.iou = search.best_iou();
        }
        return result;
    }

    const BinaryMask coarse = downscale(mask, config.raster_scale);
    const IouObjective coarse_objective(coarse);
    SimplexSearch search(coarse_objective, config.raster_scale);
    result.iterations_used = search.run(to_vertex(initial), config);
    const BlobParameter best = to_parameter(search.best());
    const double best_full = full(best);
    if (best_full > result.iou) {
        result.parameter = best;
        result.iou = best_full;
    }
    return result;
}

}  // namespace blobkit
