#pragma once

// Orthonormal separable two-dimensional Haar transform with an explicit
// coefficient container.  Level 1 holds the finest details; the approx block
// sits below level `levels`.  The transform is unitary, so energy is
// preserved and analysis/synthesis round-trip to machine precision.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dfdreg/core.hpp"

namespace dfdreg {

// Orientation indices inside a detail level.
inline constexpr int orient_horizontal = 1;  // low-pass in x, high-pass in y
inline constexpr int orient_vertical = 2;    // high-pass in x, low-pass in y
inline constexpr int orient_diagonal = 3;    // high-pass in both directions

class WaveletField {
public:
    WaveletField(std::size_t size, int levels)
        : size_(size), levels_(levels) {
        if (size < 8 || !std::has_single_bit(size))
            throw std::invalid_argument(
                "WaveletField: size must be a power of two and at least 8");
        const int max_levels = std::countr_zero(size);
        if (levels < 1 || levels > max_levels)
            throw std::invalid_argument("WaveletField: invalid level count");
        approx_.assign(block_side(levels) * block_side(levels), 0.0);
        details_.resize(static_cast<std::size_t>(levels));
        for (int l = 1; l <= levels; ++l) {
            const std::size_t side = block_side(l);
            for (auto& block : details_[static_cast<std::size_t>(l - 1)])
                block.assign(side * side, 0.0);
        }
    }

    std::size_t size() const noexcept { return size_; }
    int levels() const noexcept { return levels_; }

    // Side length of a detail block at level l (or of the approx block when
    // l == levels()).
    std::size_t block_side(int level) const {
        return size_ >> level;
    }

    std::vector<double>& approx() noexcept { return approx_; }
    const std::vector<double>& approx() const noexcept { return approx_; }

    std::vector<double>& detail(int level, int orientation) {
        check_block(level, orientation);
        return details_[static_cast<std::size_t>(level - 1)]
                       [static_cast<std::size_t>(orientation - 1)];
    }
    const std::vector<double>& detail(int level, int orientation) const {
        check_block(level, orientation);
        return details_[static_cast<std::size_t>(level - 1)]
                       [static_cast<std::size_t>(orientation - 1)];
    }

    // Total coefficient count; always equals size * size.
    std::size_t coefficient_count() const noexcept {
        std::size_t n = approx_.size();
        for (const auto& level : details_)
            for (const auto& block : level) n += block.size();
        return n;
    }

    // Visits every block.  The callback receives (level, orientation, data)
    // where the approx block is reported as (levels(), 0).
    template <class F>
    void for_each_block(F&& f) {
        f(levels_, 0, approx_);
        for (int l = 1; l <= levels_; ++l)
            for (int beta = 1; beta <= 3; ++beta)
                f(l, beta, detail(l, beta));
    }

    template <class F>
    void for_each_block(F&& f) const {
        f(levels_, 0, approx_);
        for (int l = 1; l <= levels_; ++l)
            for (int beta = 1; beta <= 3; ++beta)
                f(l, beta, detail(l, beta));
    }

    double l2_norm() const {
        double acc = 0.0;
        for_each_block([&](int, int, const std::vector<double>& b) {
            for (double v : b) acc += v * v;
        });
        return std::sqrt(acc);
    }

private:
    void check_block(int level, int orientation) const {
        if (level < 1 || level > levels_)
            throw std::invalid_argument("WaveletField: level out of range");
        if (orientation < 1 || orientation > 3)
            throw std::invalid_argument("WaveletField: orientation out of range");
    }

    std::size_t size_;
    int levels_;
    std::vector<double> approx_;
    std::vector<std::array<std::vector<double>, 3>> details_;
};

namespace detail {

inline constexpr double inv_sqrt2 = 0.70710678118654752440;

// One separable analysis step: `src` is an n x n row-major block, outputs
// are the four n/2 x n/2 quadrant blocks.
inline void haar_step(const std::vector<double>& src, std::size_t n,
                      std::vector<double>& ll, std::vector<double>& lh,
                      std::vector<double>& hl, std::vector<double>& hh) {
    const std::size_t h = n / 2;
    ll.assign(h * h, 0.0);
    lh.assign(h * h, 0.0);
    hl.assign(h * h, 0.0);
    hh.assign(h * h, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        const double* row0 = src.data() + (2 * r) * n;
        const double* row1 = src.data() + (2 * r + 1) * n;
        for (std::size_t c = 0; c < h; ++c) {
            const double a = row0[2 * c], b = row0[2 * c + 1];
            const double cc = row1[2 * c], d = row1[2 * c + 1];
            // Column direction first (x), then row direction (y); each step
            // carries the 1/sqrt(2) orthonormal weight.
            ll[r * h + c] = 0.5 * (a + b + cc + d);
            lh[r * h + c] = 0.5 * (a + b - cc - d);   // horizontal detail
            hl[r * h + c] = 0.5 * (a - b + cc - d);   // vertical detail
            hh[r * h + c] = 0.5 * (a - b - cc + d);   // diagonal detail
        }
    }
}

inline void haar_unstep(std::vector<double>& dst, std::size_t n,
                        const std::vector<double>& ll, const std::vector<double>& lh,
                        const std::vector<double>& hl, const std::vector<double>& hh) {
    const std::size_t h = n / 2;
    dst.assign(n * n, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        double* row0 = dst.data() + (2 * r) * n;
        double* row1 = dst.data() + (2 * r + 1) * n;
        for (std::size_t c = 0; c < h; ++c) {
            const double a = ll[r * h + c], hcoef = lh[r * h + c];
            const double v = hl[r * h + c], d = hh[r * h + c];
            row0[2 * c] = 0.5 * (a + hcoef + v + d);
            row0[2 * c + 1] = 0.5 * (a + hcoef - v - d);
            row1[2 * c] = 0.5 * (a - hcoef + v - d);
            row1[2 * c + 1] = 0.5 * (a - hcoef - v + d);
        }
    }
}

}  // namespace detail

inline WaveletField haar_analysis(const Image& img, int levels) {
    WaveletField field(img.size(), levels);
    std::vector<double> current = img.pixels();
    std::size_t n = img.size();
    std::vector<double> ll;
    for (int l = 1; l <= levels; ++l) {
        detail::haar_step(current, n, ll, field.detail(l, orient_horizontal),
                          field.detail(l, orient_vertical),
                          field.detail(l, orient_diagonal));
        current = ll;
        n /= 2;
    }
    field.approx() = current;
    return field;
}

inline Image haar_synthesis(const WaveletField& field) {
    std::vector<double> current = field.approx();
    std::size_t n = field.block_side(field.levels());
    std::vector<double> next;
    for (int l = field.levels(); l >= 1; --l) {
        detail::haar_unstep(next, 2 * n, current, field.detail(l, orient_horizontal),
                            field.detail(l, orient_vertical),
                            field.detail(l, orient_diagonal));
        current = next;
        n *= 2;
    }
    return Image(field.size(), std::move(current));
}

}  // namespace dfdreg
