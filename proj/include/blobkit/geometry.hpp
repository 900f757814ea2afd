#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace blobkit {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr std::size_t kDefaultMaxBlobs = 15;

/// Pixel raster the blobs live on. Origin top-left, x right, y down; pixel
/// (i, j) has its center at (i + 0.5, j + 0.5).
struct Canvas {
    int width = 512;
    int height = 512;

    /// Throws InvalidArgument unless both dimensions are >= 1.
    void validate() const;

    bool operator==(const Canvas&) const = default;
};

/// Maps any finite angle onto (-pi, pi]. Throws InvalidArgument otherwise.
double canonicalize_angle(double theta);

double degrees_to_radians(double degrees);
double radians_to_degrees(double radians);

/// Tilted ellipse [cx, cy, a, b, theta] in canvas pixels.
///
/// Always holds a > 0, b > 0, a >= b and theta in (-pi, pi]. When the
/// caller supplies a < b the axes are swapped and theta is rotated by pi/2,
/// which describes the same point set.
class BlobParameter {
public:
    BlobParameter() = default;
    BlobParameter(double cx, double cy, double a, double b, double theta);

    double cx() const noexcept { return cx_; }
    double cy() const noexcept { return cy_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double theta() const noexcept { return theta_; }

    BlobParameter with_center(double cx, double cy) const;
    BlobParameter with_theta(double theta) const;
    BlobParameter with_radii(double a, double b) const;

    bool operator==(const BlobParameter&) const = default;

private:
    double cx_ = 0.0;
    double cy_ = 0.0;
    double a_ = 1.0;
    double b_ = 1.0;
    double theta_ = 0.0;
};

/// Axis-aligned extent of an ellipse, in continuous pixel coordinates.
struct BoundingBox {
    double x_min, y_min, x_max, y_max;
};

BoundingBox bounding_box(const BlobParameter& p);

/// Closed-ellipse membership test: ((u/a)^2 + (v/b)^2 <= 1) in the
/// ellipse-aligned frame.
bool contains_point(const BlobParameter& p, double x, double y);

/// Row-major foreground/background raster.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height);
    BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    std::size_t count() const;
    bool empty_foreground() const { return count() == 0; }

    bool operator==(const BinaryMask&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Foreground pixels of one raster row form a half-open interval
/// [begin, end); begin == end means the row is empty.
struct RowSpan {
    int begin = 0;
    int end = 0;
    int length() const noexcept { return end - begin; }
};

/// Per-row foreground intervals of the rasterized ellipse, clipped to the
/// canvas. Agrees pixel-for-pixel with contains_point at pixel centers.
std::vector<RowSpan> row_spans(const BlobParameter& p, const Canvas& canvas);

BinaryMask rasterize(const BlobParameter& p, const Canvas& canvas);

/// |m1 & m2| / |m1 | m2|. Throws InvalidArgument on a size mismatch and
/// DegenerateInput when both masks are empty.
double mask_iou(const BinaryMask& m1, const BinaryMask& m2);

double ellipse_iou(const BlobParameter& p1, const BlobParameter& p2, const Canvas& canvas);

/// Throws InvalidArgument if `category` is empty or holds '{', '}' or a newline.
void validate_category(const std::string& category);

struct Blob {
    BlobParameter parameter;
    std::string description;
    std::string category;

    void validate() const;
    bool operator==(const Blob&) const = default;
};

struct BlobLayout {
    Canvas canvas;
    std::vector<Blob> blobs;
    std::string global_caption;

    void validate(std::size_t max_blobs = kDefaultMaxBlobs) const;
    bool operator==(const BlobLayout&) const = default;
};

namespace edit {
struct Move {
    std::size_t index;
    double cx, cy;
};
struct Rotate {
    std::size_t index;
    double theta;
};
struct Resize {
    std::size_t index;
    double a, b;
};
struct SetDescription {
    std::size_t index;
    std::string text;
};
struct Add {
    Blob blob;
};
struct Remove {
    std::size_t index;
};
}  // namespace edit

using LayoutEdit = std::variant<edit::Move, edit::Rotate, edit::Resize, edit::SetDescription,
                                edit::Add, edit::Remove>;

/// Applies one edit and returns the new layout; `layout` is left untouched.
BlobLayout edit_layout(const BlobLayout& layout, const LayoutEdit& change,
                       std::size_t max_blobs = kDefaultMaxBlobs);

}  // namespace blobkit
