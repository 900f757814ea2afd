#include "blobkit/errors.hpp"
#include "blobkit/geometry.hpp"
#include "blobkit/pgm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace blobkit;

namespace {

// Intersection area of two radius-r disks whose centers are d apart.
double lens_area(double r, double d) {
    return 2.0 * r * r * std::acos(d / (2.0 * r)) - (d / 2.0) * std::sqrt(4.0 * r * r - d * d);
}

double analytic_circle_iou(double r, double d) {
    const double inter = lens_area(r, d);
    return inter / (2.0 * kPi * r * r - inter);
}

BlobParameter random_in_canvas(std::mt19937& rng) {
    std::uniform_real_distribution<double> radius(10.0, 150.0);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    double a = radius(rng);
    double b = radius(rng);
    if (a < b) std::swap(a, b);
    std::uniform_real_distribution<double> pos(a + 1.0, 511.0 - a);
    return BlobParameter(pos(rng), pos(rng), a, b, angle(rng));
}

}  // namespace

TEST(CanonicalizeAngle, KnownValues) {
    EXPECT_EQ(canonicalize_angle(0.0), 0.0);
    EXPECT_NEAR(canonicalize_angle(3.0 * kPi / 2.0), -kPi / 2.0, 1e-15);
    EXPECT_NEAR(degrees_to_radians(96.0), 1.67552, 1e-5);
    EXPECT_EQ(canonicalize_angle(kPi), kPi);
    EXPECT_EQ(canonicalize_angle(-kPi), kPi);
}

TEST(CanonicalizeAngle, RangeAndCongruence) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> any(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = any(rng);
        const double c = canonicalize_angle(t);
        EXPECT_GT(c, -kPi);
        EXPECT_LE(c, kPi);
        const double k = (t - c) / (2.0 * kPi);
        EXPECT_NEAR(k, std::round(k), 1e-9);
    }
}

TEST(CanonicalizeAngle, RejectsNonFinite) {
    EXPECT_THROW(canonicalize_angle(std::nan("")), InvalidArgument);
    EXPECT_THROW(canonicalize_angle(INFINITY), InvalidArgument);
}

TEST(BlobParameter, SwapsAxesWhenMinorExceedsMajor) {
    const BlobParameter p(10, 20, 30, 60, 0.0);
    EXPECT_EQ(p.a(), 60);
    EXPECT_EQ(p.b(), 30);
    EXPECT_NEAR(p.theta(), kPi / 2.0, 1e-15);
}

TEST(BlobParameter, RejectsNonPositiveRadius) {
    EXPECT_THROW(BlobParameter(0, 0, 0, 1, 0), InvalidArgument);
    EXPECT_THROW(BlobParameter(0, 0, 1, -1, 0), InvalidArgument);
}

TEST(ContainsPoint, Examples) {
    const BlobParameter p(100, 100, 50, 20, 0.3);
    EXPECT_TRUE(contains_point(p, 100, 100));
    EXPECT_FALSE(contains_point(p, 100 + 51 * std::cos(0.3), 100 + 51 * std::sin(0.3)));
    const BlobParameter circle(256, 256, 100, 100, 0);
    EXPECT_TRUE(contains_point(circle, 326, 326));  // 70*sqrt(2) ~ 98.99
}

TEST(ContainsPoint, InvariantUnderAxisSwapWithQuarterTurn) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coord(0, 512);
    for (int k = 0; k < 20; ++k) {
        const BlobParameter p = random_in_canvas(rng);
        // The constructor swaps (b, a) back into canonical order and turns theta by pi/2.
        const BlobParameter q(p.cx(), p.cy(), p.b(), p.a(), p.theta() + kPi / 2.0);
        int disagreements = 0;
        for (int i = 0; i < 500; ++i) {
            const double x = coord(rng);
            const double y = coord(rng);
            if (contains_point(p, x, y) != contains_point(q, x, y)) ++disagreements;
        }
        EXPECT_EQ(disagreements, 0);
    }
}

TEST(Rasterize, MatchesBruteForcePixelCenters) {
    std::mt19937 rng(3);
    const Canvas canvas{200, 150};
    std::uniform_real_distribution<double> pos(-50, 250);
    std::uniform_real_distribution<double> radius(0.3, 120);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int k = 0; k < 40; ++k) {
        const BlobParameter p(pos(rng), pos(rng), radius(rng), radius(rng), angle(rng));
        const BinaryMask m = rasterize(p, canvas);
        for (int y = 0; y < canvas.height; ++y) {
            for (int x = 0; x < canvas.width; ++x) {
                ASSERT_EQ(m.at(x, y), contains_point(p, x + 0.5, y + 0.5))
                    << "pixel " << x << "," << y << " ellipse " << k;
            }
        }
    }
}

TEST(Rasterize, DiskAreaWithinTwoPercent) {
    const BinaryMask m = rasterize(BlobParameter(256, 256, 256, 256, 0), Canvas{});
    const double expected = kPi * 256.0 * 256.0;
    EXPECT_NEAR(static_cast<double>(m.count()), expected, 0.02 * expected);
}

TEST(Rasterize, AreaPropertyForInCanvasEllipses) {
    std::mt19937 rng(5);
    for (int k = 0; k < 30; ++k) {
        const BlobParameter p = random_in_canvas(rng);
        const double area = kPi * p.a() * p.b();
        EXPECT_NEAR(static_cast<double>(rasterize(p, Canvas{}).count()), area, 0.02 * area);
    }
}

TEST(Rasterize, OffCanvasEllipseIsEmpty) {
    EXPECT_EQ(rasterize(BlobParameter(-1000, 256, 100, 50, 0), Canvas{}).count(), 0u);
}

TEST(Rasterize, HalfTurnSymmetryIsBitExact) {
    const BlobParameter p(256, 256, 120, 60, degrees_to_radians(30));
    EXPECT_EQ(rasterize(p, Canvas{}), rasterize(p.with_theta(p.theta() + kPi), Canvas{}));
    std::mt19937 rng(9);
    for (int k = 0; k < 50; ++k) {
        const BlobParameter q = random_in_canvas(rng);
        EXPECT_EQ(rasterize(q, Canvas{}), rasterize(q.with_theta(q.theta() + kPi), Canvas{}));
    }
}

TEST(MaskIou, IdenticalDisjointAndErrors) {
    const Canvas c{64, 64};
    const BinaryMask m = rasterize(BlobParameter(20, 20, 10, 5, 0), c);
    EXPECT_EQ(mask_iou(m, m), 1.0);
    const BinaryMask far = rasterize(BlobParameter(50, 50, 5, 5, 0), c);
    EXPECT_EQ(mask_iou(m, far), 0.0);
    EXPECT_THROW(mask_iou(m, BinaryMask(32, 32)), InvalidArgument);
    EXPECT_THROW(mask_iou(BinaryMask(8, 8), BinaryMask(8, 8)), DegenerateInput);
}

TEST(MaskIou, LensOracle) {
    const double expected = analytic_circle_iou(100.0, 100.0);
    EXPECT_NEAR(expected, 0.2430, 5e-4);
    const double got = ellipse_iou(BlobParameter(206, 256, 100, 100, 0),
                                   BlobParameter(306, 256, 100, 100, 0), Canvas{});
    EXPECT_NEAR(got, expected, 0.01);
}

TEST(MaskIou, SymmetricAndBounded) {
    std::mt19937 rng(13);
    for (int k = 0; k < 20; ++k) {
        const auto a = rasterize(random_in_canvas(rng), Canvas{});
        const auto b = rasterize(random_in_canvas(rng), Canvas{});
        const double ab = mask_iou(a, b);
        EXPECT_EQ(ab, mask_iou(b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        if (a != b) EXPECT_LT(ab, 1.0);
    }
}

namespace {

BlobLayout three_blob_layout() {
    BlobLayout layout;
    layout.global_caption = "a cat, a dog and a ball";
    layout.blobs.push_back({BlobParameter(100, 100, 60, 30, 0.2), "a grey cat", "cat"});
    layout.blobs.push_back({BlobParameter(300, 200, 80, 50, -0.5), "a brown dog", "dog"});
    layout.blobs.push_back({BlobParameter(400, 400, 20, 20, 0), "a red ball", "ball"});
    return layout;
}

}  // namespace

TEST(EditLayout, MoveAndMoveBackRestoresLayout) {
    const BlobLayout layout = three_blob_layout();
    const BlobLayout moved = edit_layout(layout, edit::Move{0, 100.5, 42});
    EXPECT_NE(moved, layout);
    const BlobLayout back = edit_layout(moved, edit::Move{0, layout.blobs[0].parameter.cx(),
                                                          layout.blobs[0].parameter.cy()});
    EXPECT_EQ(back, layout);
}

TEST(EditLayout, RemoveKeepsOthers) {
    const BlobLayout layout = three_blob_layout();
    const BlobLayout out = edit_layout(layout, edit::Remove{1});
    ASSERT_EQ(out.blobs.size(), 2u);
    EXPECT_EQ(out.blobs[0], layout.blobs[0]);
    EXPECT_EQ(out.blobs[1], layout.blobs[2]);
    EXPECT_EQ(layout.blobs.size(), 3u);
}

TEST(EditLayout, RotateChangesOnlyThatBlobsRaster) {
    const BlobLayout layout = three_blob_layout();
    const BlobLayout out = edit_layout(layout, edit::Rotate{1, 1.2});
    for (std::size_t i = 0; i < layout.blobs.size(); ++i) {
        const bool same = rasterize(layout.blobs[i].parameter, layout.canvas) ==
                          rasterize(out.blobs[i].parameter, out.canvas);
        EXPECT_EQ(same, i != 1) << "blob " << i;
    }
}

TEST(EditLayout, ResizeDescriptionAdd) {
    const BlobLayout layout = three_blob_layout();
    const BlobLayout resized = edit_layout(layout, edit::Resize{2, 10, 40});
    EXPECT_EQ(resized.blobs[2].parameter.a(), 40);
    EXPECT_EQ(resized.blobs[2].parameter.b(), 10);
    const BlobLayout described = edit_layout(layout, edit::SetDescription{0, "a black cat"});
    EXPECT_EQ(described.blobs[0].description, "a black cat");
    const BlobLayout added = edit_layout(layout, edit::Add{{BlobParameter(1, 1, 2, 1, 0), "x", "y"}});
    EXPECT_EQ(added.blobs.size(), 4u);
}

TEST(EditLayout, Errors) {
    const BlobLayout layout = three_blob_layout();
    EXPECT_THROW(edit_layout(layout, edit::Move{3, 0, 0}), InvalidArgument);
    EXPECT_THROW(edit_layout(layout, edit::Resize{0, 0, 10}), InvalidArgument);
    EXPECT_THROW(edit_layout(layout, edit::SetDescription{0, ""}), InvalidArgument);
    EXPECT_THROW(edit_layout(layout, edit::Add{{BlobParameter(), "d", "a{b"}}), InvalidArgument);
    EXPECT_THROW(edit_layout(layout, edit::Add{{BlobParameter(), "d", "c"}}, 3), InvalidArgument);
}

TEST(Pgm, RoundTripAndErrors) {
    const BinaryMask m = rasterize(BlobParameter(30, 20, 15, 6, 0.4), Canvas{64, 48});
    EXPECT_EQ(decode_pgm(encode_pgm(m)), m);
    std::string small = "P5\n# comment\n2 1\n255\n";
    small += std::string("\x01\x00", 2);
    EXPECT_EQ(decode_pgm(small), BinaryMask(2, 1, {1, 0}));
    EXPECT_THROW(decode_pgm("P2\n2 1\n255\n"), ParseError);
    EXPECT_THROW(decode_pgm("P5\n4 4\n255\nabc"), ParseError);
}
