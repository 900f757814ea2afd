#pragma once

#include "blobkit/geometry.hpp"
#include "blobkit/matrix.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blobkit {

/// Frequencies are scale * base^k for k = 0 .. num_frequencies - 1.
struct FourierConfig {
    std::size_t num_frequencies = 8;
    double base = 2.0;
    double scale = kPi;

    void validate() const;
    std::vector<double> frequencies() const;
};

inline constexpr std::size_t kEncodedParameterSize = 6;

/// [cx/W, cy/H, a/W, b/H, sin(theta), cos(theta)]. The four geometric
/// components are clamped to [-0.5, 1.5].
std::array<double, kEncodedParameterSize> encode_parameter(const BlobParameter& p,
                                                           const Canvas& canvas);

/// (sin(w_k x), cos(w_k x)) for every component x and frequency w_k,
/// component-major. Output length is values.size() * 2 * num_frequencies.
std::vector<double> fourier_features(std::span<const double> values, const FourierConfig& config);

/// Smooth activation applied between fusion layers: x * Phi(x), Phi being
/// the standard normal CDF.
double gelu(double x);

struct DenseLayer {
    Matrix weight;  // input_dim x output_dim; y = x * W + bias
    std::vector<double> bias;
};

/// Stack of dense layers with gelu between consecutive layers (none after
/// the last). Applied independently to each input row.
class FusionMap {
public:
    FusionMap() = default;
    explicit FusionMap(std::vector<DenseLayer> layers);

    /// One square identity layer with zero bias.
    static FusionMap identity(std::size_t dim);

    /// Binary layout, little-endian throughout:
    ///   uint32 layer_count
    ///   uint32 dims[layer_count + 1]
    ///   per layer: float32 weight[dims[i] * dims[i+1]] (row-major), float32 bias[dims[i+1]]
    static FusionMap decode(std::string_view bytes);
    static FusionMap load(const std::filesystem::path& path);
    std::string encode() const;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    std::vector<double> apply(std::span<const double> input) const;

private:
    std::vector<DenseLayer> layers_;
};

/// Binary matrix layout: uint32 rows, uint32 cols, float32 values row-major,
/// little-endian.
Matrix decode_matrix(std::string_view bytes);
std::string encode_matrix(const Matrix& m);

/// Per-token fused blob embedding: row l is fusion([tokens.row(l); e_tau])
/// where e_tau = fourier_features(encode_parameter(p)).
Matrix blob_embedding(const Matrix& tokens, const BlobParameter& p, const Canvas& canvas,
                      const FourierConfig& fourier, const FusionMap& fusion);

}  // namespace blobkit
