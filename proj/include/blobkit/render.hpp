#pragma once

#include "blobkit/geometry.hpp"

#include <string>

namespace blobkit {

/// SVG overlay of every blob as a rotated ellipse with its category label.
/// Output is byte-stable for identical layouts.
std::string render_svg(const BlobLayout& layout);

}  // namespace blobkit
