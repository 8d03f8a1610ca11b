#pragma once

// Synthetic test images.  Shapes are described on the normalized square
// [-1,1]^2 and rasterized onto the pixel grid; values always land in [0,1].

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"

namespace dfdreg {

enum class PhantomKind { shepp_logan, disks, checker };

inline const char* to_string(PhantomKind k) {
    switch (k) {
        case PhantomKind::shepp_logan: return "shepp_logan";
        case PhantomKind::disks: return "disks";
        case PhantomKind::checker: return "checker";
    }
    return "?";
}

inline PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "shepp_logan") return PhantomKind::shepp_logan;
    if (s == "disks") return PhantomKind::disks;
    if (s == "checker") return PhantomKind::checker;
    throw std::invalid_argument("unknown phantom kind: " + s);
}

namespace detail {

struct Ellipse {
    double x0, y0;      // centre in [-1,1]^2
    double a, b;        // semi-axes
    double angle_deg;   // rotation, counter-clockwise
    double value;       // additive intensity
};

// Head phantom ellipses (low-contrast variant whose summed values stay in
// [0,1]).
inline const std::vector<Ellipse>& head_ellipses() {
    static const std::vector<Ellipse> table = {
        {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
        {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
        {0.22, 0.0, 0.11, 0.31, -18.0, -0.02},
        {-0.22, 0.0, 0.16, 0.41, 18.0, -0.02},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
        {0.0, -0.605, 0.023, 0.023, 0.0, 0.01},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
    };
    return table;
}

struct Disk {
    double x0, y0, radius, value;
};

// Fixed layout with three well-separated disks; separations and radii are
// chosen so the rasterization stays three 4-connected components down to the
// smallest supported image size (8 x 8).
inline const std::vector<Disk>& disk_layout() {
    static const std::vector<Disk> table = {
        {-0.45, -0.40, 0.25, 1.0},
        {0.50, 0.35, 0.20, 0.7},
        {-0.05, 0.60, 0.15, 0.5},
    };
    return table;
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Fraction of the pixel square centred at (x, y) with side `h` covered by the
// region `inside`, estimated from a 4 x 4 sub-sample.  Interior pixels still
// come out exactly 0 or 1; only boundary pixels get fractional coverage,
// which keeps the rasterization consistent with a band-limited projector.
template <class Inside>
inline double pixel_coverage(double x, double y, double h, Inside&& inside) {
    int hits = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double sx = x + ((i + 0.5) / 4.0 - 0.5) * h;
            const double sy = y + ((j + 0.5) / 4.0 - 0.5) * h;
            if (inside(sx, sy)) ++hits;
        }
    return hits / 16.0;
}

inline void add_ellipse(Image& img, const Ellipse& e) {
    const std::size_t n = img.size();
    const double step = 2.0 / static_cast<double>(n);
    const double rad = e.angle_deg * 3.14159265358979323846 / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);
    const auto inside = [&](double x, double y) {
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = (ca * dx + sa * dy) / e.a;
        const double v = (-sa * dx + ca * dy) / e.b;
        return u * u + v * v <= 1.0;
    };
    for (std::size_t row = 0; row < n; ++row) {
        // y axis points up: row 0 is the top of the image.
        const double y = 1.0 - (static_cast<double>(row) + 0.5) * step;
        for (std::size_t col = 0; col < n; ++col) {
            const double x = -1.0 + (static_cast<double>(col) + 0.5) * step;
            img.at(row, col) += e.value * pixel_coverage(x, y, step, inside);
        }
    }
}

}  // namespace detail

// Deterministic phantom of the requested kind.  Throws std::invalid_argument
// if `size` is not a power of two (>= 8).
inline Image make_phantom(PhantomKind kind, std::size_t size) {
    Image img(size);
    const double step = 2.0 / static_cast<double>(size);
    switch (kind) {
        case PhantomKind::shepp_logan: {
            for (const auto& e : detail::head_ellipses()) detail::add_ellipse(img, e);
            for (double& v : img.pixels()) v = detail::clamp01(v);
            break;
        }
        case PhantomKind::disks: {
            for (std::size_t row = 0; row < size; ++row) {
                const double y = 1.0 - (static_cast<double>(row) + 0.5) * step;
                for (std::size_t col = 0; col < size; ++col) {
                    const double x = -1.0 + (static_cast<double>(col) + 0.5) * step;
                    double v = 0.0;
                    for (const auto& d : detail::disk_layout())
                        v += d.value *
                             detail::pixel_coverage(x, y, step, [&](double sx, double sy) {
                                 const double dx = sx - d.x0, dy = sy - d.y0;
                                 return dx * dx + dy * dy <= d.radius * d.radius;
                             });
                    img.at(row, col) = detail::clamp01(v);
                }
            }
            break;
        }
        case PhantomKind::checker: {
            const std::size_t tile = size / 8;
            for (std::size_t row = 0; row < size; ++row)
                for (std::size_t col = 0; col < size; ++col)
                    img.at(row, col) =
                        static_cast<double>(((row / tile) + (col / tile)) % 2);
            break;
        }
    }
    return img;
}

// Seeded random phantom: a handful of overlapping ellipses with strong
// amplitudes, clamped to [0,1].  Used to build training and evaluation sets.
inline Image random_phantom(std::size_t size, Rng& rng) {
    Image img(size);
    const int shapes = 4 + static_cast<int>(rng.next_u64() % 5);  // 4..8
    for (int i = 0; i < shapes; ++i) {
        detail::Ellipse e;
        e.x0 = rng.uniform(-0.65, 0.65);
        e.y0 = rng.uniform(-0.65, 0.65);
        e.a = rng.uniform(0.08, 0.45);
        e.b = rng.uniform(0.08, 0.45);
        e.angle_deg = rng.uniform(0.0, 180.0);
        e.value = rng.uniform(0.25, 1.0);
        detail::add_ellipse(img, e);
    }
    for (double& v : img.pixels()) v = detail::clamp01(v);
    return img;
}

}  // namespace dfdreg
