#pragma once

#include "blobkit/geometry.hpp"
#include "blobkit/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace blobkit {

/// Visual features over an h x w plane: h*w rows (row-major over the
/// plane) by d columns.
struct FeatureGrid {
    std::size_t h = 0;
    std::size_t w = 0;
    Matrix values;

    std::size_t locations() const noexcept { return h * w; }
    std::size_t dim() const noexcept { return values.cols(); }
    void validate() const;
};

/// Keys and values of one blob's L tokens plus its attention mask over the
/// h*w feature locations (1 = the blob may be attended from there).
struct BlobTokens {
    Matrix keys;
    Matrix values;
    std::vector<std::uint8_t> mask;
};

/// Wq is d_in x d_g. wk/wv hold either one shared d_b x d_g matrix or one
/// per blob.
struct ProjectionSet {
    Matrix wq;
    std::vector<Matrix> wk;
    std::vector<Matrix> wv;

    bool shared() const noexcept { return wk.size() == 1 && wv.size() == 1; }
};

struct AttentionResult {
    Matrix output;   // h*w x d
    Matrix weights;  // h*w x (total tokens), blob-major then token
};

/// Max-pools `mask` onto an h x w grid. Cell (r, c) covers source rows
/// floor(r*H/h) .. floor((r+1)*H/h) - 1 and likewise for columns. When the
/// source is non-empty and `center` falls on the canvas, the cell holding
/// it is set as well. Throws InvalidArgument when h > H or w > W.
std::vector<std::uint8_t> downsample_mask(const BinaryMask& mask, std::size_t h, std::size_t w,
                                          std::optional<std::pair<double, double>> center = {});

/// rasterize + downsample_mask with the ellipse center forced on.
std::vector<std::uint8_t> blob_attention_mask(const BlobParameter& p, const Canvas& canvas,
                                              std::size_t h, std::size_t w);

/// Softmax over the entries with keep[i] != 0; the rest get weight 0. An
/// all-masked row yields all zeros.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> keep);

/// Single-head cross-attention of grid queries over the concatenated blob
/// tokens, logits scaled by 1/sqrt(d). With `use_masks`, blob i's tokens are
/// excluded at every location where its mask is 0; locations excluded by
/// every blob produce a zero output row.
AttentionResult cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs,
                                bool use_masks);

Matrix standard_cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs);
Matrix masked_cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs);

/// queries = g_raw * Wq. No bias.
FeatureGrid project_queries(const Matrix& g_raw, std::size_t h, std::size_t w,
                            const ProjectionSet& proj);

/// keys = e_b * Wk, values = e_b * Wv for blob `blob_index` (ignored when
/// the projection is shared).
BlobTokens project_blob(const Matrix& e_b, const ProjectionSet& proj, std::size_t blob_index,
                        std::vector<std::uint8_t> mask = {});

/// x + tanh(gate) * delta.
Matrix gated_residual(const Matrix& x, const Matrix& delta, double gate);

}  // namespace blobkit
