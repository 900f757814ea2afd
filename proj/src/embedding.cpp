#include "blobkit/embedding.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

namespace blobkit {

void FourierConfig::validate() const {
    if (num_frequencies < 1) throw InvalidArgument("num_frequencies must be >= 1", "num_frequencies");
    if (!std::isfinite(base) || base <= 0.0) throw InvalidArgument("base must be positive", "base");
    if (!std::isfinite(scale)) throw InvalidArgument("scale must be finite", "scale");
}

std::vector<double> FourierConfig::frequencies() const {
    std::vector<double> out(num_frequencies);
    for (std::size_t k = 0; k < num_frequencies; ++k) {
        out[k] = scale * std::pow(base, static_cast<double>(k));
    }
    return out;
}

std::array<double, kEncodedParameterSize> encode_parameter(const BlobParameter& p,
                                                           const Canvas& canvas) {
    canvas.validate();
    const double w = canvas.width;
    const double h = canvas.height;
    auto norm = [](double v) { return std::clamp(v, -0.5, 1.5); };
    return {norm(p.cx() / w), norm(p.cy() / h), norm(p.a() / w),
            norm(p.b() / h),  std::sin(p.theta()), std::cos(p.theta())};
}

std::vector<double> fourier_features(std::span<const double> values, const FourierConfig& config) {
    config.validate();
    const auto freqs = config.frequencies();
    std::vector<double> out;
    out.reserve(values.size() * 2 * freqs.size());
    for (double x : values) {
        for (double w : freqs) {
            out.push_back(std::sin(w * x));
            out.push_back(std::cos(w * x));
        }
    }
    return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

FusionMap::FusionMap(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw InvalidArgument("fusion map needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        const std::string where = "layers[" + std::to_string(i) + "]";
        if (l.weight.rows() == 0 || l.weight.cols() == 0) {
            throw InvalidArgument("empty weight matrix", where);
        }
        if (l.bias.size() != l.weight.cols()) {
            throw InvalidArgument("bias length does not match weight columns", where);
        }
        if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows()) {
            throw InvalidArgument("layer dimensions do not chain", where);
        }
        if (!l.weight.all_finite() ||
            !std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); })) {
            throw InvalidArgument("non-finite fusion parameter", where);
        }
    }
}

FusionMap FusionMap::identity(std::size_t dim) {
    return FusionMap({DenseLayer{Matrix::identity(dim), std::vector<double>(dim, 0.0)}});
}

std::size_t FusionMap::input_dim() const {
    return layers_.empty() ? 0 : layers_.front().weight.rows();
}

std::size_t FusionMap::output_dim() const {
    return layers_.empty() ? 0 : layers_.back().weight.cols();
}

std::vector<double> FusionMap::apply(std::span<const double> input) const {
    if (input.size() != input_dim()) {
        throw InvalidArgument("fusion input has " + std::to_string(input.size()) +
                              " features, expected " + std::to_string(input_dim()));
    }
    std::vector<double> x(input.begin(), input.end());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const DenseLayer& l = layers_[i];
        std::vector<double> y(l.bias);
        for (std::size_t r = 0; r < l.weight.rows(); ++r) {
            const auto w = l.weight.row(r);
            for (std::size_t c = 0; c < y.size(); ++c) y[c] += x[r] * w[c];
        }
        if (i + 1 < layers_.size()) {
            for (double& v : y) v = gelu(v);
        }
        x = std::move(y);
    }
    return x;
}

namespace {

class LittleEndianReader {
public:
    explicit LittleEndianReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        if (bytes_.size() - pos_ < 4) throw ParseError("unexpected end of binary data");
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
        }
        pos_ += 4;
        return v;
    }

    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr std::uint32_t kMaxDim = 1u << 16;

}  // namespace

FusionMap FusionMap::decode(std::string_view bytes) {
    LittleEndianReader in(bytes);
    const std::uint32_t n = in.u32();
    if (n == 0 || n > 64) throw ParseError("fusion map layer count out of range");
    std::vector<std::uint32_t> dims(n + 1);
    for (auto& d : dims) {
        d = in.u32();
        if (d == 0 || d > kMaxDim) throw ParseError("fusion map dimension out of range");
    }
    std::vector<DenseLayer> layers;
    for (std::uint32_t i = 0; i < n; ++i) {
        Matrix w(dims[i], dims[i + 1]);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) = in.f32();
        }
        std::vector<double> bias(dims[i + 1]);
        for (auto& b : bias) b = in.f32();
        layers.push_back({std::move(w), std::move(bias)});
    }
    if (!in.at_end()) throw ParseError("trailing bytes after fusion map parameters");
    return FusionMap(std::move(layers));
}

FusionMap FusionMap::load(const std::filesystem::path& path) { return decode(slurp(path)); }

std::string FusionMap::encode() const {
    std::string out;
    put_u32(out, static_cast<std::uint32_t>(layers_.size()));
    put_u32(out, static_cast<std::uint32_t>(input_dim()));
    for (const auto& l : layers_) put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    for (const auto& l : layers_) {
        for (double v : l.weight.data()) put_f32(out, v);
        for (double v : l.bias) put_f32(out, v);
    }
    return out;
}

Matrix decode_matrix(std::string_view bytes) {
    LittleEndianReader in(bytes);
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows > kMaxDim || cols > kMaxDim) throw ParseError("matrix dimension out of range");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = in.f32();
    }
    if (!in.at_end()) throw ParseError("trailing bytes after matrix values");
    return m;
}

std::string encode_matrix(const Matrix& m) {
    std::string out;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) put_f32(out, v);
    return out;
}

Matrix blob_embedding(const Matrix& tokens, const BlobParameter& p, const Canvas& canvas,
                      const FourierConfig& fourier, const FusionMap& fusion) {
    if (tokens.rows() < 1) throw InvalidArgument("token matrix must have at least one row", "tokens");
    if (!tokens.all_finite()) throw InvalidArgument("token matrix has non-finite values", "tokens");
    const auto encoded = encode_parameter(p, canvas);
    const auto e_tau = fourier_features(encoded, fourier);
    const std::size_t width = tokens.cols() + e_tau.size();
    if (fusion.input_dim() != width) {
        throw InvalidArgument("fusion input dimension " + std::to_string(fusion.input_dim()) +
                                  " does not match token dim + Fourier dim = " +
                                  std::to_string(width),
                              "fusion");
    }
    Matrix out(tokens.rows(), fusion.output_dim());
    std::vector<double> row(width);
    for (std::size_t l = 0; l < tokens.rows(); ++l) {
        const auto t = tokens.row(l);
        std::copy(t.begin(), t.end(), row.begin());
        std::copy(e_tau.begin(), e_tau.end(), row.begin() + static_cast<std::ptrdiff_t>(t.size()));
        const auto fused = fusion.apply(row);
        std::copy(fused.begin(), fused.end(), out.row(l).begin());
    }
    return out;
}

}  // namespace blobkit
