#pragma once

// Core containers and utilities shared by every other header: square
// power-of-two images, angle-major sinograms, deterministic random number
// streams and mean-squared-error comparison.

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfdreg {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

// Malformed file contents.  `offset` is the byte position at which the
// problem was detected (0 for an empty or unreadable file).
class format_error : public std::runtime_error {
public:
    format_error(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// A noise target that cannot be met by the requested perturbation model.
class calibration_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Divergence or invalid configuration during filter training.
class training_error : public std::runtime_error {
public:
    training_error(const std::string& what, int epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"),
          epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// ---------------------------------------------------------------------------
// Random number generation
// ---------------------------------------------------------------------------

struct RngSeed {
    std::uint64_t value = 0;
};

// xoshiro256** seeded through splitmix64.  Hand-rolled so that streams are
// bit-identical across platforms and standard library versions; `fork`
// derives independent substreams from (seed, indices) without consuming
// state, which keeps parallel and serial experiment runs identical.
class Rng {
public:
    explicit Rng(RngSeed seed) : root_(seed.value) {
        std::uint64_t x = seed.value;
        for (auto& word : state_) word = splitmix(x);
    }

    Rng fork(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        std::uint64_t x = root_;
        (void)splitmix(x);
        x ^= 0x632be59bd9b4e019ULL + a;
        (void)splitmix(x);
        x ^= 0x9e3779b97f4a7c15ULL + b;
        (void)splitmix(x);
        x ^= 0xd1b54a32d192ed03ULL + c;
        return Rng(RngSeed{splitmix(x)});
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (deterministic, no rejection loop).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    // Poisson draw.  Knuth's product method for small means, a rounded
    // normal approximation above it (relative error of the approximation is
    // far below the 1% noise-calibration tolerance at such counts).
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0.0) return 0;
        if (mean < 64.0) {
            const double limit = std::exp(-mean);
            double p = 1.0;
            std::uint64_t k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            return k - 1;
        }
        const double draw = mean + std::sqrt(mean) * gaussian();
        return draw <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(draw));
    }

    std::uint64_t root_seed() const noexcept { return root_; }

private:
    static constexpr double pi = 3.14159265358979323846;

    static std::uint64_t splitmix(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t root_;
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Image
// ---------------------------------------------------------------------------

// Square grayscale image, row-major doubles.  The side length must be a
// power of two and at least 8 so that wavelet decompositions always tile
// evenly.  `pixel_size` is carried as metadata; all geometry in this library
// works in grid units (pixel spacing 1).
class Image {
public:
    Image(std::size_t size, double pixel_size = 1.0)
        : size_(checked_size(size)), pixel_size_(pixel_size),
          pixels_(size * size, 0.0) {
        if (!(pixel_size > 0.0))
            throw std::invalid_argument("Image: pixel_size must be positive");
    }

    Image(std::size_t size, std::vector<double> pixels, double pixel_size = 1.0)
        : size_(checked_size(size)), pixel_size_(pixel_size),
          pixels_(std::move(pixels)) {
        if (!(pixel_size > 0.0))
            throw std::invalid_argument("Image: pixel_size must be positive");
        if (pixels_.size() != size_ * size_)
            throw std::invalid_argument("Image: pixel buffer size mismatch");
        for (double v : pixels_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Image: non-finite pixel value");
    }

    std::size_t width() const noexcept { return size_; }
    std::size_t height() const noexcept { return size_; }
    std::size_t size() const noexcept { return size_; }
    double pixel_size() const noexcept { return pixel_size_; }
    void set_pixel_size(double s) {
        if (!(s > 0.0)) throw std::invalid_argument("Image: pixel_size must be positive");
        pixel_size_ = s;
    }

    double& at(std::size_t row, std::size_t col) { return pixels_[row * size_ + col]; }
    double at(std::size_t row, std::size_t col) const { return pixels_[row * size_ + col]; }

    std::vector<double>& pixels() noexcept { return pixels_; }
    const std::vector<double>& pixels() const noexcept { return pixels_; }

    // Number of dyadic halvings available (size == 2^levels_available).
    int levels_available() const noexcept {
        return std::countr_zero(size_);
    }

private:
    static std::size_t checked_size(std::size_t size) {
        if (size < 8 || !std::has_single_bit(size))
            throw std::invalid_argument(
                "Image: side length must be a power of two and at least 8");
        return size;
    }

    std::size_t size_;
    double pixel_size_;
    std::vector<double> pixels_;
};

// ---------------------------------------------------------------------------
// Sinogram
// ---------------------------------------------------------------------------

enum class AngleRange { half_turn, full_turn };

inline const char* to_string(AngleRange r) {
    return r == AngleRange::half_turn ? "half_turn" : "full_turn";
}

inline AngleRange angle_range_from_string(const std::string& s) {
    if (s == "half_turn") return AngleRange::half_turn;
    if (s == "full_turn") return AngleRange::full_turn;
    throw std::invalid_argument("unknown angle range: " + s);
}

// Angle-major container of line-integral samples.  Offsets are symmetric
// about zero: offset_i = (i - (n_offsets - 1) / 2) * offset_spacing, in grid
// units.  Angles are theta_a = a * extent / n_angles with extent pi
// (half_turn) or 2*pi (full_turn).
class Sinogram {
public:
    Sinogram(std::size_t n_angles, std::size_t n_offsets,
             AngleRange range = AngleRange::half_turn, double offset_spacing = 1.0)
        : n_angles_(n_angles), n_offsets_(n_offsets), range_(range),
          offset_spacing_(offset_spacing),
          values_(n_angles * n_offsets, 0.0) {
        if (n_angles_ == 0 || n_offsets_ == 0)
            throw std::invalid_argument("Sinogram: empty grid");
        if (!(offset_spacing > 0.0))
            throw std::invalid_argument("Sinogram: offset_spacing must be positive");
    }

    std::size_t n_angles() const noexcept { return n_angles_; }
    std::size_t n_offsets() const noexcept { return n_offsets_; }
    AngleRange angle_range() const noexcept { return range_; }
    double offset_spacing() const noexcept { return offset_spacing_; }

    double angle(std::size_t a) const {
        const double extent = range_ == AngleRange::half_turn ? pi : 2.0 * pi;
        return extent * static_cast<double>(a) / static_cast<double>(n_angles_);
    }

    double offset(std::size_t o) const {
        const double centre = 0.5 * static_cast<double>(n_offsets_ - 1);
        return (static_cast<double>(o) - centre) * offset_spacing_;
    }

    double& at(std::size_t a, std::size_t o) { return values_[a * n_offsets_ + o]; }
    double at(std::size_t a, std::size_t o) const { return values_[a * n_offsets_ + o]; }

    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool same_grid(const Sinogram& other) const noexcept {
        return n_angles_ == other.n_angles_ && n_offsets_ == other.n_offsets_ &&
               range_ == other.range_ && offset_spacing_ == other.offset_spacing_;
    }

private:
    static constexpr double pi = 3.14159265358979323846;

    std::size_t n_angles_;
    std::size_t n_offsets_;
    AngleRange range_;
    double offset_spacing_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

inline double mse(const Image& a, const Image& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("mse: image dimensions differ");
    double acc = 0.0;
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pa.size());
}

inline double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("l2_distance: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace dfdreg
