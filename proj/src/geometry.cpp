#include "blobkit/geometry.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

namespace blobkit {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// Shared arithmetic for every membership query so that contains_point,
// row_spans and rasterize agree bit-for-bit.
struct EllipseFrame {
    double cx, cy, inv_a2, inv_b2, c, s;

    explicit EllipseFrame(const BlobParameter& p)
        : cx(p.cx()), cy(p.cy()), inv_a2(1.0 / (p.a() * p.a())), inv_b2(1.0 / (p.b() * p.b())) {
        c = std::cos(p.theta());
        s = std::sin(p.theta());
        // theta and theta + pi describe the same ellipse; pick one sign.
        if (c < 0.0 || (c == 0.0 && s < 0.0)) {
            c = -c;
            s = -s;
        }
    }

    bool inside(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = dx * c + dy * s;
        const double v = -dx * s + dy * c;
        return u * u * inv_a2 + v * v * inv_b2 <= 1.0;
    }
};

void require_finite(double value, const char* field) {
    if (!std::isfinite(value)) {
        throw InvalidArgument(std::string("non-finite value for ") + field, field);
    }
}

}  // namespace

void Canvas::validate() const {
    if (width < 1) throw InvalidArgument("canvas width must be >= 1", "canvas.w");
    if (height < 1) throw InvalidArgument("canvas height must be >= 1", "canvas.h");
}

double canonicalize_angle(double theta) {
    require_finite(theta, "theta");
    double r = std::remainder(theta, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

double degrees_to_radians(double degrees) { return degrees * kPi / 180.0; }
double radians_to_degrees(double radians) { return radians * 180.0 / kPi; }

BlobParameter::BlobParameter(double cx, double cy, double a, double b, double theta) {
    require_finite(cx, "cx");
    require_finite(cy, "cy");
    require_finite(a, "a");
    require_finite(b, "b");
    require_finite(theta, "theta");
    if (!(a > 0.0)) throw InvalidArgument("semi-major radius must be positive", "a");
    if (!(b > 0.0)) throw InvalidArgument("semi-minor radius must be positive", "b");
    if (a < b) {
        std::swap(a, b);
        theta += kPi / 2.0;
    }
    cx_ = cx;
    cy_ = cy;
    a_ = a;
    b_ = b;
    theta_ = canonicalize_angle(theta);
}

BlobParameter BlobParameter::with_center(double cx, double cy) const {
    return BlobParameter(cx, cy, a_, b_, theta_);
}

BlobParameter BlobParameter::with_theta(double theta) const {
    return BlobParameter(cx_, cy_, a_, b_, theta);
}

BlobParameter BlobParameter::with_radii(double a, double b) const {
    return BlobParameter(cx_, cy_, a, b, theta_);
}

BoundingBox bounding_box(const BlobParameter& p) {
    const double c = std::cos(p.theta());
    const double s = std::sin(p.theta());
    const double hw = std::sqrt(p.a() * p.a() * c * c + p.b() * p.b() * s * s);
    const double hh = std::sqrt(p.a() * p.a() * s * s + p.b() * p.b() * c * c);
    return {p.cx() - hw, p.cy() - hh, p.cx() + hw, p.cy() + hh};
}

bool contains_point(const BlobParameter& p, double x, double y) {
    return EllipseFrame(p).inside(x, y);
}

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("mask dimensions must be non-negative");
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    if (width < 0 || height < 0) throw InvalidArgument("mask dimensions must be non-negative");
    if (bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("mask bit count does not match width * height");
    }
    for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(
        std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

std::vector<RowSpan> row_spans(const BlobParameter& p, const Canvas& canvas) {
    canvas.validate();
    std::vector<RowSpan> spans(static_cast<std::size_t>(canvas.height));

    const EllipseFrame frame(p);
    const BoundingBox box = bounding_box(p);
    if (box.x_max < 0.0 || box.x_min > canvas.width || box.y_max < 0.0 ||
        box.y_min > canvas.height) {
        return spans;
    }

    const double c = frame.c;
    const double s = frame.s;
    const double qa = c * c * frame.inv_a2 + s * s * frame.inv_b2;
    const double qb_per_dy = 2.0 * c * s * (frame.inv_a2 - frame.inv_b2);
    const double qc_per_dy2 = s * s * frame.inv_a2 + c * c * frame.inv_b2;

    const int row_first = std::max(0, static_cast<int>(std::floor(box.y_min)) - 1);
    const int row_last = std::min(canvas.height - 1, static_cast<int>(std::ceil(box.y_max)) + 1);
    constexpr double kLimit = 1e9;

    for (int j = row_first; j <= row_last; ++j) {
        const double y = j + 0.5;
        const double dy = y - p.cy();
        const double qb = qb_per_dy * dy;
        const double qc = qc_per_dy2 * dy * dy - 1.0;
        const double disc = qb * qb - 4.0 * qa * qc;
        const double mid = p.cx() - qb / (2.0 * qa);
        const double half = disc > 0.0 ? std::sqrt(disc) / (2.0 * qa) : 0.0;

        long long lo;
        long long hi;
        if (disc < 0.0) {
            lo = hi = static_cast<long long>(std::llround(std::clamp(mid - 0.5, -kLimit, kLimit)));
        } else {
            lo = static_cast<long long>(std::ceil(std::clamp(mid - half - 0.5, -kLimit, kLimit)));
            hi = static_cast<long long>(std::floor(std::clamp(mid + half - 0.5, -kLimit, kLimit)));
        }
        auto in = [&](long long i) { return frame.inside(static_cast<double>(i) + 0.5, y); };
        // The analytic interval can be off by one at the boundary; settle it
        // with the exact predicate.
        while (in(lo - 1)) --lo;
        while (lo <= hi && !in(lo)) ++lo;
        while (in(hi + 1)) ++hi;
        while (hi >= lo && !in(hi)) --hi;
        if (lo > hi) continue;

        const long long begin = std::clamp<long long>(lo, 0, canvas.width);
        const long long end = std::clamp<long long>(hi + 1, 0, canvas.width);
        if (begin < end) {
            spans[static_cast<std::size_t>(j)] = {static_cast<int>(begin), static_cast<int>(end)};
        }
    }
    return spans;
}

BinaryMask rasterize(const BlobParameter& p, const Canvas& canvas) {
    const auto spans = row_spans(p, canvas);
    BinaryMask mask(canvas.width, canvas.height);
    for (int j = 0; j < canvas.height; ++j) {
        const RowSpan& span = spans[static_cast<std::size_t>(j)];
        for (int i = span.begin; i < span.end; ++i) mask.set(i, j, true);
    }
    return mask;
}

double mask_iou(const BinaryMask& m1, const BinaryMask& m2) {
    if (m1.width() != m2.width() || m1.height() != m2.height()) {
        throw InvalidArgument("mask size mismatch: " + std::to_string(m1.width()) + "x" +
                              std::to_string(m1.height()) + " vs " + std::to_string(m2.width()) +
                              "x" + std::to_string(m2.height()));
    }
    const auto& a = m1.bits();
    const auto& b = m2.bits();
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        inter += static_cast<std::size_t>(a[k] & b[k]);
        uni += static_cast<std::size_t>(a[k] | b[k]);
    }
    if (uni == 0) throw DegenerateInput("IOU of two empty masks is undefined");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double ellipse_iou(const BlobParameter& p1, const BlobParameter& p2, const Canvas& canvas) {
    return mask_iou(rasterize(p1, canvas), rasterize(p2, canvas));
}

void validate_category(const std::string& category) {
    if (category.empty()) throw InvalidArgument("category must be non-empty", "category");
    if (category.find_first_of("{}\n\r") != std::string::npos) {
        throw InvalidArgument("category must not contain braces or newlines", "category");
    }
}

void Blob::validate() const {
    validate_category(category);
    if (description.empty()) throw InvalidArgument("description must be non-empty", "description");
    if (description.find_first_of("\n\r") != std::string::npos) {
        throw InvalidArgument("description must be a single line", "description");
    }
}

void BlobLayout::validate(std::size_t max_blobs) const {
    canvas.validate();
    if (blobs.size() > max_blobs) {
        throw InvalidArgument("layout holds " + std::to_string(blobs.size()) +
                                  " blobs, maximum is " + std::to_string(max_blobs),
                              "blobs");
    }
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        try {
            blobs[i].validate();
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(e.what(), "blobs[" + std::to_string(i) + "]." + e.path());
        }
    }
}

namespace {

Blob& blob_at(BlobLayout& layout, std::size_t index) {
    if (index >= layout.blobs.size()) {
        throw InvalidArgument("blob index " + std::to_string(index) + " out of range (" +
                                  std::to_string(layout.blobs.size()) + " blobs)",
                              "index");
    }
    return layout.blobs[index];
}

}  // namespace

BlobLayout edit_layout(const BlobLayout& layout, const LayoutEdit& change, std::size_t max_blobs) {
    BlobLayout out = layout;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, edit::Move>) {
                Blob& b = blob_at(out, e.index);
                b.parameter = b.parameter.with_center(e.cx, e.cy);
            } else if constexpr (std::is_same_v<T, edit::Rotate>) {
                Blob& b = blob_at(out, e.index);
                b.parameter = b.parameter.with_theta(e.theta);
            } else if constexpr (std::is_same_v<T, edit::Resize>) {
                Blob& b = blob_at(out, e.index);
                b.parameter = b.parameter.with_radii(e.a, e.b);
            } else if constexpr (std::is_same_v<T, edit::SetDescription>) {
                Blob& b = blob_at(out, e.index);
                b.description = e.text;
                b.validate();
            } else if constexpr (std::is_same_v<T, edit::Add>) {
                if (out.blobs.size() >= max_blobs) {
                    throw InvalidArgument("cannot add blob: maximum of " +
                                              std::to_string(max_blobs) + " reached",
                                          "blobs");
                }
                e.blob.validate();
                out.blobs.push_back(e.blob);
            } else if constexpr (std::is_same_v<T, edit::Remove>) {
                blob_at(out, e.index);
                out.blobs.erase(out.blobs.begin() + static_cast<std::ptrdiff_t>(e.index));
            }
        },
        change);
    return out;
}

}  // namespace blobkit
