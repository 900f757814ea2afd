#include "blobkit/pgm.hpp"

#include "blobkit/errors.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

namespace blobkit {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_int(const char* what) {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) throw ParseError(std::string("PGM ") + what + " too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw ParseError(std::string("PGM header: expected ") + what);
        return value;
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

BinaryMask decode_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw ParseError("not a binary PGM (missing P5 magic)");
    }
    HeaderReader reader(bytes);
    reader.advance(2);
    const long width = reader.read_int("width");
    const long height = reader.read_int("height");
    const long maxval = reader.read_int("maxval");
    if (width < 1 || height < 1) throw ParseError("PGM dimensions must be positive");
    if (maxval < 1 || maxval > 255) throw ParseError("PGM maxval must be in [1, 255]");
    // Exactly one whitespace byte separates the header from the raster.
    if (reader.pos() >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
        throw ParseError("PGM header not terminated by whitespace");
    }
    reader.advance(1);

    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - reader.pos() < n) {
        throw ParseError("PGM raster truncated: expected " + std::to_string(n) + " bytes");
    }
    std::vector<std::uint8_t> bits(n);
    for (std::size_t k = 0; k < n; ++k) {
        bits[k] = bytes[reader.pos() + k] != 0 ? 1 : 0;
    }
    return BinaryMask(static_cast<int>(width), static_cast<int>(height), std::move(bits));
}

std::string encode_pgm(const BinaryMask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width()) + " " +
                      std::to_string(mask.height()) + "\n255\n";
    out.reserve(out.size() + mask.bits().size());
    for (auto b : mask.bits()) out.push_back(b ? static_cast<char>(255) : '\0');
    return out;
}

BinaryMask read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    const std::string bytes = encode_pgm(mask);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace blobkit
