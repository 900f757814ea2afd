#pragma once

#include "blobkit/geometry.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace blobkit {

/// Decodes a binary graymap ("P5", maxval <= 255). Nonzero samples are
/// foreground. Throws ParseError on malformed input.
BinaryMask decode_pgm(std::string_view bytes);

/// Encodes foreground as 255 and background as 0, maxval 255.
std::string encode_pgm(const BinaryMask& mask);

BinaryMask read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace blobkit
