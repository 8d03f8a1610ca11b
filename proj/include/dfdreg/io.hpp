#pragma once

// File IO: raw little-endian float containers for images ("FFLT"), sinograms
// ("FSIN") and wavelet coefficient fields ("FWVT"), 8/16-bit binary PGM with
// values mapped to [0,1], and JSON helpers.  All read errors are reported as
// format_error carrying the byte offset of the problem.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfdreg/core.hpp"
#include "dfdreg/haar.hpp"

namespace dfdreg {

namespace detail {

inline std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw format_error("cannot open file: " + path, 0);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return data;
}

// Sequential reader over an in-memory buffer that knows its position.
class ByteReader {
public:
    ByteReader(std::vector<unsigned char> data, std::string path)
        : data_(std::move(data)), path_(std::move(path)) {}

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw format_error(std::string("truncated ") + what + " in " + path_, pos_);
    }

    void expect_magic(const char (&magic)[5]) {
        require(4, "magic");
        if (std::memcmp(data_.data() + pos_, magic, 4) != 0)
            throw format_error(std::string("bad magic, expected \"") + magic +
                                   "\" in " + path_,
                               pos_);
        pos_ += 4;
    }

    std::uint8_t u8(const char* what) {
        require(1, what);
        return data_[pos_++];
    }

    std::uint32_t u32le(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    double f64le(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    void f64le_block(std::vector<double>& out, std::size_t count, const char* what) {
        require(count * 8, what);
        out.resize(count);
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(out.data(), data_.data() + pos_, count * 8);
            pos_ += count * 8;
        } else {
            for (std::size_t i = 0; i < count; ++i) out[i] = f64le(what);
        }
    }

    void skip(std::size_t n, const char* what) {
        require(n, what);
        pos_ += n;
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::vector<unsigned char> data_;
    std::string path_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    void magic(const char (&m)[5]) { buf_.insert(buf_.end(), m, m + 4); }

    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u32le(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }

    void f64le(double d) {
        const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }

    void f64le_block(const std::vector<double>& v) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto* p = reinterpret_cast<const unsigned char*>(v.data());
            buf_.insert(buf_.end(), p, p + v.size() * 8);
        } else {
            for (double d : v) f64le(d);
        }
    }

    void pad(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

    void store(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open file for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out)
            throw std::runtime_error("write failed: " + path);
    }

private:
    std::vector<unsigned char> buf_;
};

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           std::equal(suffix.rbegin(), suffix.rend(), s.rbegin());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raw float image ("FFLT"): 16-byte header (magic, u32 width, u32 height,
// 4 pad bytes), then width*height little-endian doubles, row-major.
// ---------------------------------------------------------------------------

inline void write_image_fflt(const Image& img, const std::string& path) {
    detail::ByteWriter w;
    w.magic("FFLT");
    w.u32le(static_cast<std::uint32_t>(img.width()));
    w.u32le(static_cast<std::uint32_t>(img.height()));
    w.pad(4);
    w.f64le_block(img.pixels());
    w.store(path);
}

inline Image read_image_fflt(const std::string& path) {
    detail::ByteReader r(detail::slurp(path), path);
    if (r.remaining() == 0)
        throw format_error("empty file: " + path, 0);
    r.expect_magic("FFLT");
    const std::size_t sizepos = r.pos();
    const std::uint32_t width = r.u32le("width");
    const std::uint32_t height = r.u32le("height");
    r.skip(4, "header padding");
    if (width != height || width < 8 || !std::has_single_bit(width))
        throw format_error("image dimensions must be a square power of two, got " +
                               std::to_string(width) + "x" + std::to_string(height),
                           sizepos);
    std::vector<double> pixels;
    r.f64le_block(pixels, static_cast<std::size_t>(width) * height, "pixel data");
    try {
        return Image(width, std::move(pixels));
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("invalid pixel data: ") + e.what(), 16);
    }
}

// ---------------------------------------------------------------------------
// Sinogram ("FSIN"): magic, u32 n_angles, u32 n_offsets, u8 angle-range flag
// (0 = half_turn, 1 = full_turn), 7 pad bytes, then angle-major doubles.
// ---------------------------------------------------------------------------

inline void write_sinogram(const Sinogram& sino, const std::string& path) {
    detail::ByteWriter w;
    w.magic("FSIN");
    w.u32le(static_cast<std::uint32_t>(sino.n_angles()));
    w.u32le(static_cast<std::uint32_t>(sino.n_offsets()));
    w.u8(sino.angle_range() == AngleRange::full_turn ? 1 : 0);
    w.pad(7);
    w.f64le_block(sino.values());
    w.store(path);
}

inline Sinogram read_sinogram(const std::string& path) {
    detail::ByteReader r(detail::slurp(path), path);
    if (r.remaining() == 0)
        throw format_error("empty file: " + path, 0);
    r.expect_magic("FSIN");
    const std::uint32_t n_angles = r.u32le("n_angles");
    const std::uint32_t n_offsets = r.u32le("n_offsets");
    const std::size_t flagpos = r.pos();
    const std::uint8_t flag = r.u8("angle range flag");
    if (flag > 1)
        throw format_error("angle range flag must be 0 or 1, got " +
                               std::to_string(int(flag)),
                           flagpos);
    r.skip(7, "header padding");
    if (n_angles == 0 || n_offsets == 0)
        throw format_error("empty sinogram grid", 4);
    Sinogram sino(n_angles, n_offsets,
                  flag ? AngleRange::full_turn : AngleRange::half_turn);
    r.f64le_block(sino.values(), static_cast<std::size_t>(n_angles) * n_offsets,
                  "sinogram data");
    return sino;
}

// ---------------------------------------------------------------------------
// Wavelet field ("FWVT"): magic, u32 size, u32 levels, then the approx block
// followed by detail blocks fine-to-coarse, orientations 1 (horizontal),
// 2 (vertical), 3 (diagonal).
// ---------------------------------------------------------------------------

inline void write_wavelet_field(const WaveletField& field, const std::string& path) {
    detail::ByteWriter w;
    w.magic("FWVT");
    w.u32le(static_cast<std::uint32_t>(field.size()));
    w.u32le(static_cast<std::uint32_t>(field.levels()));
    w.f64le_block(field.approx());
    for (int l = 1; l <= field.levels(); ++l)
        for (int beta = 1; beta <= 3; ++beta)
            w.f64le_block(field.detail(l, beta));
    w.store(path);
}

inline WaveletField read_wavelet_field(const std::string& path) {
    detail::ByteReader r(detail::slurp(path), path);
    if (r.remaining() == 0)
        throw format_error("empty file: " + path, 0);
    r.expect_magic("FWVT");
    const std::size_t headpos = r.pos();
    const std::uint32_t size = r.u32le("size");
    const std::uint32_t levels = r.u32le("levels");
    if (size < 8 || !std::has_single_bit(size) || levels < 1 ||
        levels > static_cast<std::uint32_t>(std::countr_zero(size)))
        throw format_error("invalid wavelet field shape: size " +
                               std::to_string(size) + ", levels " +
                               std::to_string(levels),
                           headpos);
    WaveletField field(size, static_cast<int>(levels));
    std::size_t count = field.approx().size();
    r.f64le_block(field.approx(), count, "approx block");
    for (int l = 1; l <= field.levels(); ++l)
        for (int beta = 1; beta <= 3; ++beta) {
            auto& block = field.detail(l, beta);
            r.f64le_block(block, block.size(), "detail block");
        }
    return field;
}

// ---------------------------------------------------------------------------
// PGM (P5, binary).  maxval <= 255 reads one byte per pixel, larger maxval
// reads big-endian 16-bit words; values are scaled to [0,1] by maxval.
// ---------------------------------------------------------------------------

namespace detail {

inline int pgm_token(ByteReader& r, const char* what) {
    // Skips whitespace and '#' comments, then parses a non-negative integer.
    for (;;) {
        r.require(1, what);
        const std::uint8_t c = r.u8(what);
        if (c == '#') {
            while (r.remaining() > 0 && r.u8(what) != '\n') {}
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        if (c < '0' || c > '9')
            throw format_error(std::string("expected digit while parsing ") + what,
                               r.pos() - 1);
        long value = c - '0';
        while (r.remaining() > 0) {
            const std::size_t before = r.pos();
            const std::uint8_t d = r.u8(what);
            if (d < '0' || d > '9') {
                if (d != ' ' && d != '\t' && d != '\r' && d != '\n')
                    throw format_error(std::string("malformed integer in ") + what, before);
                break;
            }
            value = value * 10 + (d - '0');
            if (value > 1 << 20)
                throw format_error(std::string("unreasonably large value in ") + what,
                                   before);
        }
        return static_cast<int>(value);
    }
}

}  // namespace detail

inline Image read_image_pgm(const std::string& path) {
    detail::ByteReader r(detail::slurp(path), path);
    if (r.remaining() == 0)
        throw format_error("empty file: " + path, 0);
    r.require(2, "PGM signature");
    const std::uint8_t p = r.u8("signature");
    const std::uint8_t five = r.u8("signature");
    if (p != 'P' || five != '5')
        throw format_error("not a binary PGM (expected P5)", 0);
    const int width = detail::pgm_token(r, "width");
    const int height = detail::pgm_token(r, "height");
    const std::size_t maxvalpos = r.pos();
    const int maxval = detail::pgm_token(r, "maxval");
    if (maxval <= 0 || maxval > 65535)
        throw format_error("maxval out of range: " + std::to_string(maxval), maxvalpos);
    if (width != height || width < 8 || !std::has_single_bit(static_cast<unsigned>(width)))
        throw format_error("image dimensions must be a square power of two, got " +
                               std::to_string(width) + "x" + std::to_string(height),
                           2);
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> pixels(n);
    const double scale = 1.0 / maxval;
    if (maxval <= 255) {
        r.require(n, "pixel raster");
        for (std::size_t i = 0; i < n; ++i) pixels[i] = scale * r.u8("pixel");
    } else {
        r.require(2 * n, "pixel raster");
        for (std::size_t i = 0; i < n; ++i) {
            const int hi = r.u8("pixel");
            const int lo = r.u8("pixel");
            pixels[i] = scale * (hi * 256 + lo);
        }
    }
    return Image(static_cast<std::size_t>(width), std::move(pixels));
}

// Writes 16-bit PGM; values are clamped to [0,1] and rounded onto 0..65535,
// so a 16-bit PGM read back through read_image_pgm is reproduced exactly.
inline void write_image_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open file for writing: " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n65535\n";
    std::vector<unsigned char> raster;
    raster.reserve(img.pixels().size() * 2);
    for (double v : img.pixels()) {
        const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        const int word = static_cast<int>(std::lround(clamped * 65535.0));
        raster.push_back(static_cast<unsigned char>(word >> 8));
        raster.push_back(static_cast<unsigned char>(word & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raster.data()),
              static_cast<std::streamsize>(raster.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

// Extension-dispatched image IO (.pgm or .fflt).
inline Image read_image(const std::string& path) {
    if (detail::has_suffix(path, ".pgm")) return read_image_pgm(path);
    return read_image_fflt(path);
}

inline void write_image(const Image& img, const std::string& path) {
    if (detail::has_suffix(path, ".pgm"))
        write_image_pgm(img, path);
    else
        write_image_fflt(img, path);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw format_error("cannot open file: " + path, 0);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error("JSON parse error in " + path + ": " + e.what(),
                           e.byte > 0 ? static_cast<std::size_t>(e.byte - 1) : 0);
    }
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

}  // namespace dfdreg
