#include "blobkit/errors.hpp"
#include "blobkit/layout_text.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace blobkit;

namespace {

constexpr const char* kTeddyLine =
    "teddy-bear {major-radius: 162px; minor-radius: 76px; cx: 444px; cy: 258px; angle: 96}";
constexpr const char* kCatLine =
    "cat {major-radius: 137px; minor-radius: 116px; cx: 149px; 236cy: ?px; angle: 3}";

std::string read_file(const std::string& name) {
    std::ifstream in(std::string(BLOBKIT_TEST_DATA) + "/" + name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Blob make_blob(std::string category, BlobParameter p, std::string description = {}) {
    if (description.empty()) description = category;
    return Blob{p, std::move(description), std::move(category)};
}

}  // namespace

TEST(NormalizeCategory, Rules) {
    EXPECT_EQ(normalize_category("Teddy-Bear"), "teddy bear");
    EXPECT_EQ(normalize_category("  potted__plant "), "potted plant");
    EXPECT_EQ(normalize_category("hot \t dog"), "hot dog");
    EXPECT_EQ(normalize_category("cat"), "cat");
}

TEST(SerializeCss, TeddyBearLine) {
    const Blob b = make_blob("teddy-bear", BlobParameter(444, 258, 162, 76, degrees_to_radians(96)));
    EXPECT_EQ(serialize_css_line(b, Canvas{}), kTeddyLine);
}

TEST(SerializeCss, RoundsFoldsAndClamps) {
    const Canvas canvas;
    // 2.5 rounds away from zero; -30 degrees folds to 150.
    const Blob b = make_blob("cup", BlobParameter(10.5, 20.4, 30.5, 0.2, degrees_to_radians(-30)));
    EXPECT_EQ(serialize_css_line(b, canvas),
              "cup {major-radius: 31px; minor-radius: 1px; cx: 11px; cy: 20px; angle: 150}");
    const Blob far = make_blob("car", BlobParameter(-40, 900, 2000, 100, degrees_to_radians(179.7)));
    EXPECT_EQ(serialize_css_line(far, canvas),
              "car {major-radius: 512px; minor-radius: 100px; cx: 0px; cy: 512px; angle: 0}");
}

TEST(ParseCss, TeddyBearExact) {
    const CssParseResult r = parse_css(kTeddyLine, Canvas{});
    ASSERT_EQ(r.layout.blobs.size(), 1u);
    const Blob& b = r.layout.blobs[0];
    EXPECT_EQ(b.category, "teddy-bear");
    EXPECT_EQ(b.description, "teddy-bear");
    EXPECT_EQ(b.parameter.cx(), 444.0);
    EXPECT_EQ(b.parameter.cy(), 258.0);
    EXPECT_EQ(b.parameter.a(), 162.0);
    EXPECT_EQ(b.parameter.b(), 76.0);
    EXPECT_NEAR(radians_to_degrees(b.parameter.theta()), 96.0, 1e-9);
    EXPECT_TRUE(r.rejects.empty());
}

TEST(ParseCss, MalformedCatLineIsRejected) {
    const std::string text = std::string(kTeddyLine) + "\n" + kCatLine + "\n";
    const CssParseResult r = parse_css(text, Canvas{});
    ASSERT_EQ(r.layout.blobs.size(), 1u);
    ASSERT_EQ(r.rejects.size(), 1u);
    EXPECT_EQ(r.rejects[0].line_number, 2u);
    EXPECT_EQ(r.rejects[0].text, kCatLine);
    EXPECT_NE(r.rejects[0].reason.find("missing property cy"), std::string::npos);
}

TEST(ParseCss, AllLinesRejectedThrows) {
    try {
        parse_css(kCatLine, Canvas{});
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        ASSERT_EQ(e.rejects().size(), 1u);
        EXPECT_NE(e.rejects()[0].reason.find("missing property cy"), std::string::npos);
    }
    EXPECT_THROW(parse_css("", Canvas{}), ParseError);
}

TEST(ParseCss, ToleratesWhitespaceOrderAndUnits) {
    const CssParseResult r = parse_css(
        "  Potted Plant{ cy:100 ; cx: 50px;angle:45; minor-radius:20px; major-radius: 40 }  \n\n",
        Canvas{});
    ASSERT_EQ(r.layout.blobs.size(), 1u);
    EXPECT_EQ(r.layout.blobs[0].category, "Potted Plant");
    EXPECT_EQ(r.layout.blobs[0].parameter.cx(), 50.0);
    EXPECT_EQ(r.layout.blobs[0].parameter.a(), 40.0);
}

TEST(ParseCss, RejectsOutOfRangeAndGarbage) {
    const std::string text =
        "dog {major-radius: 40px; minor-radius: 20px; cx: 10px; cy: 10px; angle: 0}\n"
        "bird {major-radius: -4px; minor-radius: 20px; cx: 10px; cy: 10px; angle: 0}\n"
        "this line has no braces\n"
        "fish {major-radius: abc; minor-radius: 20px; cx: 10px; cy: 10px; angle: 0}\n";
    const CssParseResult r = parse_css(text, Canvas{});
    EXPECT_EQ(r.layout.blobs.size(), 1u);
    EXPECT_EQ(r.rejects.size(), 3u);
}

TEST(CssRoundTrip, RandomIntegerLayouts) {
    std::mt19937 rng(99);
    const Canvas canvas;
    const char* names[] = {"cat", "teddy-bear", "potted plant", "dog", "car"};
    for (int trial = 0; trial < 100; ++trial) {
        BlobLayout layout;
        const int n = std::uniform_int_distribution<int>(1, 15)(rng);
        for (int i = 0; i < n; ++i) {
            const int b = std::uniform_int_distribution<int>(1, 512)(rng);
            const int a = std::uniform_int_distribution<int>(b, 512)(rng);
            const int deg = std::uniform_int_distribution<int>(0, 179)(rng);
            const BlobParameter p(std::uniform_int_distribution<int>(0, 512)(rng),
                                  std::uniform_int_distribution<int>(0, 512)(rng), a, b,
                                  degrees_to_radians(deg));
            layout.blobs.push_back(make_blob(names[i % 5], p));
        }
        const CssParseResult r = parse_css(serialize_css(layout), canvas);
        EXPECT_TRUE(r.rejects.empty());
        EXPECT_EQ(r.layout, layout) << serialize_css(layout);
    }
}

TEST(ParseCss, MaxBlobsExceededIsRejected) {
    std::string text;
    for (int i = 0; i < 17; ++i) text += std::string(kTeddyLine) + "\n";
    const CssParseResult r = parse_css(text, Canvas{}, 15);
    EXPECT_EQ(r.layout.blobs.size(), 15u);
    EXPECT_EQ(r.rejects.size(), 2u);
}

TEST(Descriptions, EscapingRoundTrip) {
    BlobLayout layout;
    layout.blobs.push_back(make_blob("cat", BlobParameter(1, 1, 1, 1, 0), "A {curly} cat \\ with slash."));
    layout.blobs.push_back(make_blob("teddy-bear", BlobParameter(1, 1, 1, 1, 0), "Plain bear."));
    const std::string text = serialize_descriptions(layout);
    EXPECT_EQ(text, "cat {A \\{curly\\} cat \\\\ with slash.}\nteddy-bear {Plain bear.}\n");
    const DescriptionParseResult r = parse_descriptions(text);
    ASSERT_EQ(r.lines.size(), 2u);
    EXPECT_EQ(r.lines[0], (DescriptionLine{"cat", "A {curly} cat \\ with slash."}));
    EXPECT_EQ(r.lines[1], (DescriptionLine{"teddy-bear", "Plain bear."}));
}

TEST(Descriptions, MultiLineSentenceAndRejects) {
    const DescriptionParseResult r =
        parse_descriptions("cat {A cat\nspread over lines.}\nnot a description\ndog {ok}\n");
    ASSERT_EQ(r.lines.size(), 2u);
    EXPECT_EQ(r.lines[0].sentence, "A cat spread over lines.");
    EXPECT_EQ(r.lines[1].category, "dog");
    EXPECT_EQ(r.rejects.size(), 1u);
}

TEST(Descriptions, PositionalPairingByNormalizedCategory) {
    BlobLayout layout;
    layout.blobs.push_back(make_blob("cat", BlobParameter(10, 10, 5, 5, 0)));
    layout.blobs.push_back(make_blob("Teddy_Bear", BlobParameter(20, 20, 5, 5, 0)));
    layout.blobs.push_back(make_blob("cat", BlobParameter(30, 30, 5, 5, 0)));
    const std::vector<DescriptionLine> descs{{"teddy-bear", "bear"},
                                             {"cat", "first cat"},
                                             {"cat", "second cat"},
                                             {"dog", "stray"}};
    const PairingResult r = attach_descriptions(layout, descs);
    EXPECT_EQ(r.layout.blobs[0].description, "first cat");
    EXPECT_EQ(r.layout.blobs[1].description, "bear");
    EXPECT_EQ(r.layout.blobs[2].description, "second cat");
    ASSERT_EQ(r.unmatched_descriptions.size(), 1u);
    EXPECT_EQ(r.unmatched_descriptions[0].category, "dog");
    EXPECT_TRUE(r.blobs_without_description.empty());

    const PairingResult partial = attach_descriptions(layout, std::vector<DescriptionLine>{{"cat", "x"}});
    EXPECT_EQ(partial.blobs_without_description, (std::vector<std::size_t>{1, 2}));
}

TEST(Prompts, ParameterPromptMatchesGolden) {
    PromptBundle bundle;
    bundle.demonstrations.push_back(
        {"a teddy bear to the right of a cat", std::string(kTeddyLine) + "\n" + kCatLine + "\n"});
    bundle.test_caption = "a teddy bear to the left of a bed";
    EXPECT_EQ(build_parameter_prompt(bundle, Canvas{}), read_file("param_prompt_golden.txt"));
}

TEST(Prompts, DescriptionPromptMatchesGolden) {
    BlobLayout demo;
    demo.blobs.push_back(make_blob(
        "teddy-bear", BlobParameter(444, 258, 162, 76, degrees_to_radians(96)),
        "The teddy bear in the close-up is white and has a large size. It is sitting next to a pink "
        "stuffed animal, which appears to be a dragon or a panda. The teddy bear is positioned on a "
        "bed, and it is surrounded by other stuffed animals, creating a cozy and playful scene."));
    demo.blobs.push_back(make_blob(
        "cat", BlobParameter(149, 236, 137, 116, degrees_to_radians(3)),
        "The cat in the close-up is a large, striped tabby cat. It has a distinctive black and brown "
        "striped pattern on its fur, which is quite noticeable. The cat appears to be sitting or "
        "standing on top of a stuffed animal, possibly a teddy bear, which adds a playful and "
        "curious element to the scene. The cat's size and style give it a unique and eye-catching "
        "appearance, making it an interesting subject for a close-up photo."));
    PromptBundle bundle;
    bundle.demonstrations.push_back({"a teddy bear to the right of a cat", demo});
    bundle.test_caption = "a teddy bear to the left of a bed";
    EXPECT_EQ(build_description_prompt(bundle), read_file("desc_prompt_golden.txt"));
}

TEST(Prompts, CanvasSlotsAndStructuredDemos) {
    PromptBundle bundle;
    bundle.system_instruction = "W={{width}} H={{height}} M={{max_extent}}";
    BlobLayout demo;
    demo.blobs.push_back(make_blob("teddy-bear", BlobParameter(444, 258, 162, 76, degrees_to_radians(96))));
    bundle.demonstrations.push_back({"c", demo});
    bundle.test_caption = "t";
    const std::string prompt = build_parameter_prompt(bundle, Canvas{640, 480});
    EXPECT_EQ(prompt, std::string("W=640 H=480 M=640\n\nPrompt: c\nLayout:\n") + kTeddyLine +
                          "\n\nPrompt: t\nLayout:");
    EXPECT_EQ(prompt, build_parameter_prompt(bundle, Canvas{640, 480}));
    EXPECT_NE(default_parameter_instruction().find("{{max_extent}}px"), std::string::npos);
}

TEST(LayoutJson, RoundTrip) {
    BlobLayout layout;
    layout.canvas = Canvas{640, 480};
    layout.global_caption = "two things";
    layout.blobs.push_back(make_blob("cat", BlobParameter(10.25, 20.5, 30, 10, 0.75), "a grey cat"));
    layout.blobs.push_back(make_blob("dog", BlobParameter(100, 200, 40, 40, 0)));
    EXPECT_EQ(parse_json(layout_json(layout)), layout);
}

TEST(LayoutJson, SchemaErrorsCarryPaths) {
    try {
        parse_json(R"({"canvas":{"w":512,"h":512}})");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("missing field: blobs"), std::string::npos);
    }
    try {
        parse_json(R"({"canvas":{"w":512,"h":512},"blobs":[{"category":"cat","cx":1,"cy":1,"a":-3,"b":1,"theta_rad":0}]})");
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_EQ(e.path(), "blobs[0].a");
    }
    EXPECT_THROW(parse_json("{not json"), ParseError);
    EXPECT_THROW(parse_json(R"({"canvas":{"w":512,"h":512},"blobs":[{"category":"cat"}]})"), ParseError);
}

TEST(LayoutJson, DescriptionDefaultsToCategory) {
    const BlobLayout l = parse_json(
        R"({"canvas":{"w":512,"h":512},"blobs":[{"category":"cat","cx":1,"cy":2,"a":3,"b":1,"theta_rad":0}]})");
    EXPECT_EQ(l.blobs[0].description, "cat");
    EXPECT_EQ(l.global_caption, "");
}
