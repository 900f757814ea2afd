#pragma once

#include "blobkit/errors.hpp"
#include "blobkit/geometry.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace blobkit {

// ---------------------------------------------------------------------------
// CSS-style parameter lines:
//   <category> {major-radius: <n>px; minor-radius: <n>px; cx: <n>px; cy: <n>px; angle: <n>}
// ---------------------------------------------------------------------------

/// Lowercase, trimmed, with '-' and '_' read as spaces and runs of spaces
/// collapsed. Used wherever categories are compared.
std::string normalize_category(std::string_view category);

/// Integer-quantized CSS line for one blob. Angles are folded into [0, 180)
/// degrees; radii are clamped to [1, max(W, H)] and centers to the canvas.
std::string serialize_css_line(const Blob& blob, const Canvas& canvas);

/// One line per blob, each terminated by '\n'.
std::string serialize_css(const BlobLayout& layout);

struct ParseWarning {
    std::size_t line_number = 0;
    std::string message;
};

struct CssParseResult {
    BlobLayout layout;
    std::vector<RejectedLine> rejects;
    std::vector<ParseWarning> warnings;
};

/// Tolerant line-by-line parse of LLM output. Lines that fail are collected
/// in `rejects`; parsed blobs get their category as description. Throws
/// ParseError (carrying the rejects) when no line parses.
CssParseResult parse_css(std::string_view text, const Canvas& canvas,
                         std::size_t max_blobs = kDefaultMaxBlobs);

// ---------------------------------------------------------------------------
// Description blocks: <category> {<sentence>}
// Inside the sentence '\', '{' and '}' are written with a leading backslash.
// ---------------------------------------------------------------------------

struct DescriptionLine {
    std::string category;
    std::string sentence;

    bool operator==(const DescriptionLine&) const = default;
};

struct DescriptionParseResult {
    std::vector<DescriptionLine> lines;
    std::vector<RejectedLine> rejects;
};

std::string serialize_descriptions(const BlobLayout& layout);
DescriptionParseResult parse_descriptions(std::string_view text);

struct PairingResult {
    BlobLayout layout;
    std::vector<DescriptionLine> unmatched_descriptions;
    std::vector<std::size_t> blobs_without_description;
};

/// Assigns the k-th description of a category to the k-th blob of the same
/// (normalized) category.
PairingResult attach_descriptions(const BlobLayout& layout,
                                  std::span<const DescriptionLine> descriptions);

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

struct Demonstration {
    std::string caption;
    /// A structured layout, or completion text used verbatim.
    std::variant<BlobLayout, std::string> content;
};

struct PromptBundle {
    /// Empty selects the built-in instruction. Slots {{width}}, {{height}}
    /// and {{max_extent}} are substituted in either case.
    std::string system_instruction;
    std::vector<Demonstration> demonstrations;
    std::string test_caption;
};

std::string default_parameter_instruction();
std::string default_description_instruction();

/// instruction, blank line, then per demonstration
/// "Prompt: <caption>\nLayout:\n<css lines>\n", then "Prompt: <test>\nLayout:".
std::string build_parameter_prompt(const PromptBundle& bundle, const Canvas& canvas);

/// Same shape as the parameter prompt with "Region Desc:" stanzas.
std::string build_description_prompt(const PromptBundle& bundle);

// ---------------------------------------------------------------------------
// Canonical JSON:
// {"canvas":{"w":..,"h":..},"caption":"..","blobs":[{"category","cx","cy","a","b",
//  "theta_rad","description"}]}
// Schema errors raise ParseError with the offending path; invariant
// violations raise InvalidArgument with the path.
// ---------------------------------------------------------------------------

nlohmann::json layout_to_json(const BlobLayout& layout);
BlobLayout layout_from_json(const nlohmann::json& doc, std::size_t max_blobs = kDefaultMaxBlobs);

nlohmann::json parameter_to_json(const BlobParameter& p);
BlobParameter parameter_from_json(const nlohmann::json& doc, const std::string& path = {});

std::string layout_json(const BlobLayout& layout);
BlobLayout parse_json(std::string_view text, std::size_t max_blobs = kDefaultMaxBlobs);

}  // namespace blobkit
