#include "blobkit/layout_text.hpp"

#include <algorithm>

namespace blobkit {

namespace {

constexpr std::string_view kParameterInstruction =
    "Instruction: Given a sentence prompt that will be used to generate an image, plan the layout "
    "of the image. The generated layout should follow the CSS style, where each line starts with "
    "the object name and is followed by its absolute position depicted as an ellipse. Formally, "
    "each line should be like \"object {major-radius: ?px; minor-radius: ?px; cx: ?px; cy: ?px; "
    "angle: ?}\". The image is {{width}}px wide and {{height}}px high. Therefore, all properties "
    "of the positions (including major-radius, minor-radius, cx and cy) should not exceed "
    "{{max_extent}}px, and the value of angle is in degree and it should be within [0, 180]. "
    "Finally, we prefer all objects to be large (i.e., each ellipse better has a large "
    "major-radius), if possible.";

constexpr std::string_view kDescriptionInstruction =
    "Instruction: Given a sentence prompt that will be used to generate an image, plan the region "
    "descriptions of the image, where each line starts with the object name. For example, each "
    "line should be like \"cat {The cat in the close-up is a large, gray and white cat with a "
    "fluffy appearance. The cat's size and style suggest that it is a domesticated cat, likely a "
    "house cat, and it is comfortable in its environment. The cat's gray and white coloration "
    "adds to its unique and visually appealing appearance.}\". The generated region description "
    "should describe the object in the close-up and focus on its color, appearance, size, and "
    "style, etc.";

void replace_all(std::string& text, std::string_view slot, const std::string& value) {
    for (std::size_t pos = text.find(slot); pos != std::string::npos;
         pos = text.find(slot, pos + value.size())) {
        text.replace(pos, slot.size(), value);
    }
}

std::string with_trailing_newline(std::string text) {
    if (!text.empty() && text.back() != '\n') text.push_back('\n');
    return text;
}

template <typename Render>
std::string build_prompt(const PromptBundle& bundle, std::string instruction,
                         std::string_view stanza_label, Render render_layout) {
    std::string out = std::move(instruction);
    out += "\n\n";
    for (const Demonstration& demo : bundle.demonstrations) {
        out += "Prompt: " + demo.caption + "\n";
        out += std::string(stanza_label) + "\n";
        if (const auto* layout = std::get_if<BlobLayout>(&demo.content)) {
            out += render_layout(*layout);
        } else {
            out += with_trailing_newline(std::get<std::string>(demo.content));
        }
        out += "\n";
    }
    out += "Prompt: " + bundle.test_caption + "\n";
    out += stanza_label;
    return out;
}

}  // namespace

std::string default_parameter_instruction() { return std::string(kParameterInstruction); }
std::string default_description_instruction() { return std::string(kDescriptionInstruction); }

std::string build_parameter_prompt(const PromptBundle& bundle, const Canvas& canvas) {
    canvas.validate();
    std::string instruction =
        bundle.system_instruction.empty() ? default_parameter_instruction() : bundle.system_instruction;
    replace_all(instruction, "{{width}}", std::to_string(canvas.width));
    replace_all(instruction, "{{height}}", std::to_string(canvas.height));
    replace_all(instruction, "{{max_extent}}", std::to_string(std::max(canvas.width, canvas.height)));
    return build_prompt(bundle, std::move(instruction), "Layout:",
                        [](const BlobLayout& layout) { return serialize_css(layout); });
}

std::string build_description_prompt(const PromptBundle& bundle) {
    std::string instruction = bundle.system_instruction.empty() ? default_description_instruction()
                                                                : bundle.system_instruction;
    return build_prompt(bundle, std::move(instruction), "Region Desc:",
                        [](const BlobLayout& layout) { return serialize_descriptions(layout); });
}

}  // namespace blobkit
