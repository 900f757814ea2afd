#include "blobkit/render.hpp"

#include <array>
#include <cstdio>

namespace blobkit {

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

constexpr std::array<const char*, 10> kPalette = {"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                                  "#911eb4", "#42d4f4", "#f032e6", "#9a6324",
                                                  "#469990", "#808000"};

}  // namespace

std::string render_svg(const BlobLayout& layout) {
    const std::string w = std::to_string(layout.canvas.width);
    const std::string h = std::to_string(layout.canvas.height);
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
           "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h +
           "\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    if (!layout.global_caption.empty()) {
        out += "  <title>" + xml_escape(layout.global_caption) + "</title>\n";
    }
    for (std::size_t i = 0; i < layout.blobs.size(); ++i) {
        const Blob& blob = layout.blobs[i];
        const BlobParameter& p = blob.parameter;
        const char* color = kPalette[i % kPalette.size()];
        const std::string cx = fixed(p.cx());
        const std::string cy = fixed(p.cy());
        out += "  <g id=\"blob-" + std::to_string(i) + "\">\n";
        out += "    <ellipse cx=\"" + cx + "\" cy=\"" + cy + "\" rx=\"" + fixed(p.a()) + "\" ry=\"" +
               fixed(p.b()) + "\" transform=\"rotate(" + fixed(radians_to_degrees(p.theta())) + " " +
               cx + " " + cy + ")\" fill=\"" + color + "\" fill-opacity=\"0.25\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += "    <text x=\"" + cx + "\" y=\"" + cy +
               "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
               "dominant-baseline=\"middle\" fill=\"#000000\">" +
               xml_escape(blob.category) + "</text>\n";
        out += "  </g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace blobkit
