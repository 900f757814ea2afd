#pragma once

#include "blobkit/geometry.hpp"

#include <cstddef>

namespace blobkit {

struct FitConfig {
    std::size_t max_iterations = 200;
    double iou_tolerance = 1e-3;
    /// Objective resolution as a fraction of the mask resolution, in (0, 1].
    double raster_scale = 1.0;
    bool refine = true;

    void validate() const;
};

struct FitResult {
    BlobParameter parameter;
    double iou = 0.0;
    std::size_t iterations_used = 0;
    double initial_iou = 0.0;
};

/// Second-moment ellipse of the foreground: centroid, principal axis, and
/// semi-axes 2*sqrt(eigenvalue). Throws DegenerateInput for fewer than five
/// foreground pixels or collinear foreground.
BlobParameter moment_init(const BinaryMask& mask);

/// IOU between `mask` and the rasterization of `p` on the mask's own canvas.
/// Same value as mask_iou(rasterize(p, canvas), mask) without materializing
/// the raster.
class IouObjective {
public:
    explicit IouObjective(const BinaryMask& mask);

    double operator()(const BlobParameter& p) const;
    std::size_t foreground() const noexcept { return foreground_; }

private:
    Canvas canvas_;
    std::size_t foreground_ = 0;
    // row_prefix_[j * (width + 1) + i] = foreground count of row j in [0, i)
    std::vector<std::uint32_t> row_prefix_;
};

/// IOU-maximizing single-ellipse fit: moment initialization followed by a
/// Nelder-Mead search over (cx, cy, a, b, theta). Deterministic.
FitResult fit_ellipse(const BinaryMask& mask, const FitConfig& config = {});

}  // namespace blobkit
