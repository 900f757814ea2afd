#include "blobkit/layout_text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

namespace blobkit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

long long round_half_away(double v) { return static_cast<long long>(std::round(v)); }

// Reads "<number>[px|deg]" with surrounding whitespace; nullopt otherwise.
std::optional<double> parse_quantity(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || !std::isfinite(value)) return std::nullopt;
    const std::string unit = lower(trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr))));
    if (!unit.empty() && unit != "px" && unit != "deg") return std::nullopt;
    return value;
}

constexpr std::array<std::string_view, 5> kCssProperties = {"major-radius", "minor-radius", "cx",
                                                            "cy", "angle"};

}  // namespace

std::string normalize_category(std::string_view category) {
    std::string out;
    bool pending_space = false;
    for (char ch : trim(category)) {
        const auto c = static_cast<unsigned char>(ch);
        if (ch == '-' || ch == '_' || std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string serialize_css_line(const Blob& blob, const Canvas& canvas) {
    validate_category(blob.category);
    const BlobParameter& p = blob.parameter;
    const long long max_extent = std::max(canvas.width, canvas.height);
    const long long major = std::clamp(round_half_away(p.a()), 1LL, max_extent);
    const long long minor = std::clamp(round_half_away(p.b()), 1LL, max_extent);
    const long long cx = std::clamp(round_half_away(p.cx()), 0LL, static_cast<long long>(canvas.width));
    const long long cy = std::clamp(round_half_away(p.cy()), 0LL, static_cast<long long>(canvas.height));
    double degrees = std::fmod(radians_to_degrees(p.theta()), 180.0);
    if (degrees < 0.0) degrees += 180.0;
    long long angle = round_half_away(degrees);
    if (angle >= 180) angle = 0;

    return blob.category + " {major-radius: " + std::to_string(major) +
           "px; minor-radius: " + std::to_string(minor) + "px; cx: " + std::to_string(cx) +
           "px; cy: " + std::to_string(cy) + "px; angle: " + std::to_string(angle) + "}";
}

std::string serialize_css(const BlobLayout& layout) {
    std::string out;
    for (const Blob& b : layout.blobs) {
        out += serialize_css_line(b, layout.canvas);
        out += '\n';
    }
    return out;
}

CssParseResult parse_css(std::string_view text, const Canvas& canvas, std::size_t max_blobs) {
    canvas.validate();
    CssParseResult result;
    result.layout.canvas = canvas;

    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view raw = text.substr(start, end - start);
        start = end + 1;
        ++line_number;

        const std::string_view line = trim(raw);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        auto reject = [&](std::string reason) {
            result.rejects.push_back({line_number, std::string(line), std::move(reason)});
        };

        const std::size_t open = line.find('{');
        if (open == std::string_view::npos) {
            reject("missing opening brace");
        } else if (const std::size_t close = line.find('}', open); close == std::string_view::npos) {
            reject("missing closing brace");
        } else {
            const std::string category(trim(line.substr(0, open)));
            if (category.empty()) {
                reject("missing category");
            } else {
                if (!trim(line.substr(close + 1)).empty()) {
                    result.warnings.push_back({line_number, "trailing text after '}' ignored"});
                }
                std::map<std::string, double> values;
                std::optional<std::string> failure;
                std::string_view body = line.substr(open + 1, close - open - 1);
                while (!body.empty() && !failure) {
                    const std::size_t semi = body.find(';');
                    const std::string_view piece = trim(body.substr(0, semi));
                    body = semi == std::string_view::npos ? std::string_view{} : body.substr(semi + 1);
                    if (piece.empty()) continue;
                    const std::size_t colon = piece.find(':');
                    if (colon == std::string_view::npos) {
                        result.warnings.push_back(
                            {line_number, "malformed property '" + std::string(piece) + "' ignored"});
                        continue;
                    }
                    const std::string key = lower(trim(piece.substr(0, colon)));
                    if (std::find(kCssProperties.begin(), kCssProperties.end(), key) ==
                        kCssProperties.end()) {
                        result.warnings.push_back(
                            {line_number, "unknown property '" + key + "' ignored"});
                        continue;
                    }
                    const auto value = parse_quantity(piece.substr(colon + 1));
                    if (!value) {
                        failure = "invalid value for " + key + ": '" +
                                  std::string(trim(piece.substr(colon + 1))) + "'";
                        break;
                    }
                    if (values.count(key)) {
                        result.warnings.push_back(
                            {line_number, "duplicate property '" + key + "', last value kept"});
                    }
                    values[key] = *value;
                }
                if (!failure) {
                    for (std::string_view key : kCssProperties) {
                        if (!values.count(std::string(key))) {
                            failure = "missing property " + std::string(key);
                            break;
                        }
                    }
                }
                if (!failure) {
                    const double major = values["major-radius"];
                    const double minor = values["minor-radius"];
                    if (!(major > 0.0) || !(minor > 0.0)) failure = "non-positive radius";
                }
                if (!failure && result.layout.blobs.size() >= max_blobs) {
                    failure = "exceeds maximum blob count " + std::to_string(max_blobs);
                }
                if (failure) {
                    reject(*failure);
                } else {
                    try {
                        validate_category(category);
                        Blob blob;
                        blob.category = category;
                        blob.description = category;
                        blob.parameter = BlobParameter(values["cx"], values["cy"],
                                                       values["major-radius"], values["minor-radius"],
                                                       degrees_to_radians(values["angle"]));
                        result.layout.blobs.push_back(std::move(blob));
                    } catch (const InvalidArgument& e) {
                        reject(e.what());
                    }
                }
            }
        }
        if (end == text.size()) break;
    }

    if (result.layout.blobs.empty()) {
        throw ParseError("no parseable layout lines", result.rejects);
    }
    return result;
}

namespace {

std::string escape_sentence(std::string_view s) {
    std::string out;
    for (char ch : s) {
        if (ch == '\\' || ch == '{' || ch == '}') out.push_back('\\');
        out.push_back(ch);
    }
    return out;
}

}  // namespace

std::string serialize_descriptions(const BlobLayout& layout) {
    std::string out;
    for (const Blob& b : layout.blobs) {
        validate_category(b.category);
        out += b.category + " {" + escape_sentence(b.description) + "}\n";
    }
    return out;
}

DescriptionParseResult parse_descriptions(std::string_view text) {
    DescriptionParseResult result;
    std::size_t pos = 0;
    std::size_t line = 1;

    auto advance = [&](std::size_t to) {
        for (; pos < to && pos < text.size(); ++pos) {
            if (text[pos] == '\n') ++line;
        }
    };
    auto line_end = [&](std::size_t from) {
        const std::size_t e = text.find('\n', from);
        return e == std::string_view::npos ? text.size() : e;
    };

    while (true) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance(pos + 1);
        if (pos >= text.size()) break;

        const std::size_t block_start = pos;
        const std::size_t block_line = line;
        const std::size_t eol = line_end(pos);
        const std::size_t open = text.find('{', pos);
        if (open == std::string_view::npos || open > eol) {
            result.rejects.push_back(
                {block_line, std::string(trim(text.substr(pos, eol - pos))), "missing opening brace"});
            advance(eol + 1);
            continue;
        }
        const std::string category(trim(text.substr(pos, open - pos)));

        std::string sentence;
        int depth = 1;
        std::size_t k = open + 1;
        for (; k < text.size(); ++k) {
            const char ch = text[k];
            if (ch == '\\' && k + 1 < text.size()) {
                sentence.push_back(text[++k]);
                continue;
            }
            if (ch == '{') ++depth;
            if (ch == '}' && --depth == 0) break;
            sentence.push_back(ch == '\n' || ch == '\r' ? ' ' : ch);
        }
        if (k >= text.size()) {
            result.rejects.push_back({block_line, std::string(trim(text.substr(block_start, eol - block_start))),
                                      "unbalanced braces"});
            advance(eol + 1);
            continue;
        }
        advance(k + 1);

        const std::string trimmed(trim(sentence));
        if (category.empty()) {
            result.rejects.push_back({block_line, "{" + trimmed + "}", "missing category"});
        } else if (category.find('}') != std::string::npos) {
            result.rejects.push_back({block_line, category, "category contains a brace"});
        } else if (trimmed.empty()) {
            result.rejects.push_back({block_line, category + " {}", "empty description"});
        } else {
            result.lines.push_back({category, trimmed});
        }
    }
    return result;
}

PairingResult attach_descriptions(const BlobLayout& layout,
                                  std::span<const DescriptionLine> descriptions) {
    PairingResult result{layout, {}, {}};
    std::map<std::string, std::vector<std::size_t>> queues;
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        queues[normalize_category(descriptions[i].category)].push_back(i);
    }
    std::map<std::string, std::size_t> taken;
    std::vector<bool> used(descriptions.size(), false);
    for (std::size_t i = 0; i < result.layout.blobs.size(); ++i) {
        Blob& blob = result.layout.blobs[i];
        const std::string key = normalize_category(blob.category);
        const auto it = queues.find(key);
        std::size_t& next = taken[key];
        if (it == queues.end() || next >= it->second.size()) {
            result.blobs_without_description.push_back(i);
            continue;
        }
        const std::size_t d = it->second[next++];
        used[d] = true;
        blob.description = descriptions[d].sentence;
    }
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        if (!used[i]) result.unmatched_descriptions.push_back(descriptions[i]);
    }
    return result;
}

}  // namespace blobkit
