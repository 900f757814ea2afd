#include "blobkit/attention.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace blobkit {

void FeatureGrid::validate() const {
    if (h < 1 || w < 1) throw InvalidArgument("feature grid must be at least 1x1", "g");
    if (values.rows() != h * w) {
        throw InvalidArgument("feature grid has " + std::to_string(values.rows()) +
                                  " rows, expected h*w = " + std::to_string(h * w),
                              "g");
    }
    if (values.cols() < 1) throw InvalidArgument("feature dimension must be >= 1", "g");
    if (!values.all_finite()) throw InvalidArgument("feature grid has non-finite values", "g");
}

namespace {

std::size_t cell_start(std::size_t index, std::size_t source, std::size_t cells) {
    return index * source / cells;
}

}  // namespace

std::vector<std::uint8_t> downsample_mask(const BinaryMask& mask, std::size_t h, std::size_t w,
                                          std::optional<std::pair<double, double>> center) {
    if (h < 1 || w < 1) throw InvalidArgument("target grid must be at least 1x1");
    const auto src_h = static_cast<std::size_t>(mask.height());
    const auto src_w = static_cast<std::size_t>(mask.width());
    if (h > src_h || w > src_w) {
        throw InvalidArgument("cannot upsample a " + std::to_string(src_w) + "x" +
                              std::to_string(src_h) + " mask to " + std::to_string(w) + "x" +
                              std::to_string(h));
    }
    std::vector<std::uint8_t> out(h * w, 0);
    bool any = false;
    for (std::size_t r = 0; r < h; ++r) {
        const std::size_t y0 = cell_start(r, src_h, h);
        const std::size_t y1 = cell_start(r + 1, src_h, h);
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t x0 = cell_start(c, src_w, w);
            const std::size_t x1 = cell_start(c + 1, src_w, w);
            bool hit = false;
            for (std::size_t y = y0; y < y1 && !hit; ++y) {
                for (std::size_t x = x0; x < x1; ++x) {
                    if (mask.at(static_cast<int>(x), static_cast<int>(y))) {
                        hit = true;
                        break;
                    }
                }
            }
            out[r * w + c] = hit ? 1 : 0;
            any = any || hit;
        }
    }
    if (any && center) {
        const double cx = center->first;
        const double cy = center->second;
        if (cx >= 0.0 && cy >= 0.0 && cx < static_cast<double>(src_w) &&
            cy < static_cast<double>(src_h)) {
            const auto px = static_cast<std::size_t>(cx);
            const auto py = static_cast<std::size_t>(cy);
            std::size_t r = 0;
            while (r + 1 < h && cell_start(r + 1, src_h, h) <= py) ++r;
            std::size_t c = 0;
            while (c + 1 < w && cell_start(c + 1, src_w, w) <= px) ++c;
            out[r * w + c] = 1;
        }
    }
    return out;
}

std::vector<std::uint8_t> blob_attention_mask(const BlobParameter& p, const Canvas& canvas,
                                              std::size_t h, std::size_t w) {
    return downsample_mask(rasterize(p, canvas), h, w, std::make_pair(p.cx(), p.cy()));
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> keep) {
    if (logits.size() != keep.size()) throw InvalidArgument("logit and mask lengths differ");
    std::vector<double> out(logits.size(), 0.0);
    double max_logit = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (keep[i]) {
            max_logit = std::max(max_logit, logits[i]);
            any = true;
        }
    }
    if (!any) return out;
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (keep[i]) {
            out[i] = std::exp(logits[i] - max_logit);
            sum += out[i];
        }
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (keep[i]) out[i] /= sum;
    }
    return out;
}

AttentionResult cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs,
                                bool use_masks) {
    queries.validate();
    if (blobs.empty()) throw InvalidArgument("cross-attention needs at least one blob", "blobs");
    const std::size_t d = queries.dim();
    const std::size_t hw = queries.locations();

    std::size_t total_tokens = 0;
    for (std::size_t n = 0; n < blobs.size(); ++n) {
        const BlobTokens& b = blobs[n];
        const std::string where = "blobs[" + std::to_string(n) + "]";
        if (b.keys.rows() < 1 || b.keys.rows() != b.values.rows()) {
            throw InvalidArgument("keys and values must share a non-zero token count", where);
        }
        if (b.keys.cols() != d || b.values.cols() != d) {
            throw InvalidArgument("key/value dimension does not match query dimension " +
                                      std::to_string(d),
                                  where);
        }
        if (use_masks && b.mask.size() != hw) {
            throw InvalidArgument("mask length " + std::to_string(b.mask.size()) +
                                      " does not match h*w = " + std::to_string(hw),
                                  where + ".mask");
        }
        if (!b.keys.all_finite() || !b.values.all_finite()) {
            throw InvalidArgument("non-finite key/value entries", where);
        }
        total_tokens += b.keys.rows();
    }

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    AttentionResult result{Matrix(hw, d), Matrix(hw, total_tokens)};
    std::vector<double> logits(total_tokens);
    std::vector<std::uint8_t> keep(total_tokens);

    for (std::size_t j = 0; j < hw; ++j) {
        const auto q = queries.values.row(j);
        std::size_t t = 0;
        for (const BlobTokens& b : blobs) {
            const bool visible = !use_masks || b.mask[j] != 0;
            for (std::size_t l = 0; l < b.keys.rows(); ++l, ++t) {
                keep[t] = visible ? 1 : 0;
                logits[t] = 0.0;
                if (!visible) continue;
                const auto k = b.keys.row(l);
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += q[c] * k[c];
                logits[t] = dot * inv_sqrt_d;
            }
        }
        const auto weights = masked_softmax(logits, keep);
        auto out = result.output.row(j);
        std::copy(weights.begin(), weights.end(), result.weights.row(j).begin());
        t = 0;
        for (const BlobTokens& b : blobs) {
            for (std::size_t l = 0; l < b.values.rows(); ++l, ++t) {
                if (!keep[t]) continue;
                const auto v = b.values.row(l);
                for (std::size_t c = 0; c < d; ++c) out[c] += weights[t] * v[c];
            }
        }
    }
    return result;
}

Matrix standard_cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs) {
    return cross_attention(queries, blobs, false).output;
}

Matrix masked_cross_attention(const FeatureGrid& queries, std::span<const BlobTokens> blobs) {
    return cross_attention(queries, blobs, true).output;
}

FeatureGrid project_queries(const Matrix& g_raw, std::size_t h, std::size_t w,
                            const ProjectionSet& proj) {
    FeatureGrid grid{h, w, matmul(g_raw, proj.wq)};
    grid.validate();
    return grid;
}

BlobTokens project_blob(const Matrix& e_b, const ProjectionSet& proj, std::size_t blob_index,
                        std::vector<std::uint8_t> mask) {
    if (proj.wk.empty() || proj.wk.size() != proj.wv.size()) {
        throw InvalidArgument("projection set needs matching key and value matrices", "proj");
    }
    const std::size_t slot = proj.shared() ? 0 : blob_index;
    if (slot >= proj.wk.size()) {
        throw InvalidArgument("no projection for blob " + std::to_string(blob_index), "proj");
    }
    return BlobTokens{matmul(e_b, proj.wk[slot]), matmul(e_b, proj.wv[slot]), std::move(mask)};
}

Matrix gated_residual(const Matrix& x, const Matrix& delta, double gate) {
    if (x.rows() != delta.rows() || x.cols() != delta.cols()) {
        throw InvalidArgument("gated residual shape mismatch");
    }
    const double g = std::tanh(gate);
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto dst = out.row(r);
        const auto src = delta.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) dst[c] += g * src[c];
    }
    return out;
}

}  // namespace blobkit
