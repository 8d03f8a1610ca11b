#pragma once

// Parallel-beam Radon transform on the pixel grid: ray-driven forward
// projector with bilinear interpolation, its exact matrix transpose as the
// backprojector, ramp (|frequency|) filtering of sinogram rows, and filtered
// backprojection with a stored scalar calibration.
//
// Geometry works in grid units: pixel spacing is 1, detector offsets are
// i - (n_offsets-1)/2 for i = 0..n_offsets-1, and line integrals are taken
// with respect to arc length measured in pixels.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dfdreg/core.hpp"
#include "dfdreg/fft.hpp"

namespace dfdreg {

struct RadonGeometry {
    std::size_t image_size = 0;
    std::size_t n_angles = 0;
    std::size_t n_offsets = 0;
    AngleRange angle_range = AngleRange::half_turn;
    // Dimensionless correction applied on top of the analytic filtered
    // backprojection scale; fixed once from a disk reconstruction (see
    // calibrate_fbp) and persisted with the geometry.
    double fbp_calibration = 1.0;

    RadonGeometry() = default;

    RadonGeometry(std::size_t image_size_, std::size_t n_angles_,
                  std::size_t n_offsets_, AngleRange range = AngleRange::half_turn)
        : image_size(image_size_), n_angles(n_angles_), n_offsets(n_offsets_),
          angle_range(range) {
        validate();
    }

    void validate() const {
        if (image_size < 8 || !std::has_single_bit(image_size))
            throw std::invalid_argument(
                "RadonGeometry: image_size must be a power of two and at least 8");
        if (n_angles < 2)
            throw std::invalid_argument("RadonGeometry: need at least 2 angles");
        if (n_offsets < 3 || n_offsets % 2 == 0)
            throw std::invalid_argument("RadonGeometry: n_offsets must be odd and >= 3");
    }

    Sinogram make_sinogram() const {
        return Sinogram(n_angles, n_offsets, angle_range, 1.0);
    }
};

// Smallest odd offset count whose detector just covers the image diagonal.
inline std::size_t default_n_offsets(std::size_t image_size) {
    const double half_diag = 0.70710678118654752440 * static_cast<double>(image_size);
    return 2 * static_cast<std::size_t>(std::floor(half_diag)) + 1;
}

inline nlohmann::json geometry_to_json(const RadonGeometry& g) {
    return nlohmann::json{{"image_size", g.image_size},
                          {"n_angles", g.n_angles},
                          {"n_offsets", g.n_offsets},
                          {"angle_range", to_string(g.angle_range)},
                          {"fbp_calibration", g.fbp_calibration}};
}

inline RadonGeometry geometry_from_json(const nlohmann::json& j) {
    try {
        RadonGeometry g;
        g.image_size = j.at("image_size").get<std::size_t>();
        g.n_angles = j.at("n_angles").get<std::size_t>();
        g.n_offsets = j.at("n_offsets").get<std::size_t>();
        g.angle_range = angle_range_from_string(j.at("angle_range").get<std::string>());
        g.fbp_calibration = j.at("fbp_calibration").get<double>();
        g.validate();
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("invalid geometry JSON: ") + e.what(), 0);
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("invalid geometry JSON: ") + e.what(), 0);
    }
}

namespace detail {

// Ray sampling step in pixels (at most half the pixel spacing).
inline constexpr double ray_step = 0.5;

// Enumerates the bilinear stencil taps of every sample point along the ray
// (angle index a, offset index o).  `visit(pixel_index, weight)` is called
// for each tap; the forward projector gathers with these weights and the
// backprojector scatters with the same ones, which makes the two operators
// exact transposes of each other.
template <class Visit>
inline void for_each_ray_tap(const RadonGeometry& g, const Sinogram& grid,
                             std::size_t a, std::size_t o, Visit&& visit) {
    const std::size_t n = g.image_size;
    const double centre = 0.5 * static_cast<double>(n - 1);
    const double theta = grid.angle(a);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double s = grid.offset(o);

    // Ray point: p(t) = s * (ct, st) + t * (-st, ct) in centred coordinates.
    // Clip t to the region where the bilinear stencil can touch the image,
    // |x| <= centre + 1 and |y| <= centre + 1.
    const double bound = centre + 1.0;
    double t_lo = -1e300, t_hi = 1e300;
    const auto clip = [&](double p0, double dp) {
        if (std::abs(dp) < 1e-12) {
            if (std::abs(p0) > bound) t_lo = 1.0, t_hi = 0.0;  // empty
            return;
        }
        double lo = (-bound - p0) / dp;
        double hi = (bound - p0) / dp;
        if (lo > hi) std::swap(lo, hi);
        if (lo > t_lo) t_lo = lo;
        if (hi < t_hi) t_hi = hi;
    };
    clip(s * ct, -st);
    clip(s * st, ct);
    if (!(t_lo < t_hi)) return;

    const std::size_t steps =
        static_cast<std::size_t>(std::ceil((t_hi - t_lo) / ray_step));
    if (steps == 0) return;

    double x = s * ct + (t_lo + 0.5 * ray_step) * (-st);
    double y = s * st + (t_lo + 0.5 * ray_step) * ct;
    const double dx = -st * ray_step;
    const double dy = ct * ray_step;
    const double fn = static_cast<double>(n);

    for (std::size_t k = 0; k < steps; ++k, x += dx, y += dy) {
        const double colf = x + centre;
        const double rowf = centre - y;  // y axis points up
        if (colf <= -1.0 || colf >= fn || rowf <= -1.0 || rowf >= fn) continue;
        const double fcol = std::floor(colf);
        const double frow = std::floor(rowf);
        const double wx = colf - fcol;
        const double wy = rowf - frow;
        const long c0 = static_cast<long>(fcol);
        const long r0 = static_cast<long>(frow);
        const bool c0_in = c0 >= 0, c1_in = c0 + 1 < static_cast<long>(n);
        const bool r0_in = r0 >= 0, r1_in = r0 + 1 < static_cast<long>(n);
        const std::size_t base = static_cast<std::size_t>(r0) * n + static_cast<std::size_t>(c0);
        if (r0_in && c0_in) visit(base, (1.0 - wx) * (1.0 - wy));
        if (r0_in && c1_in) visit(base + 1, wx * (1.0 - wy));
        if (r1_in && c0_in) visit(base + n, (1.0 - wx) * wy);
        if (r1_in && c1_in) visit(base + n + 1, wx * wy);
    }
}

}  // namespace detail

// Line integrals of `img` along the rays described by `g`, arc length in
// pixel units (midpoint rule, step <= half a pixel).
inline Sinogram radon_forward(const Image& img, const RadonGeometry& g) {
    if (img.size() != g.image_size)
        throw std::invalid_argument("radon_forward: image size does not match geometry");
    Sinogram sino = g.make_sinogram();
    const double* px = img.pixels().data();
    for (std::size_t a = 0; a < g.n_angles; ++a) {
        for (std::size_t o = 0; o < g.n_offsets; ++o) {
            double acc = 0.0;
            detail::for_each_ray_tap(g, sino, a, o, [&](std::size_t idx, double w) {
                acc += w * px[idx];
            });
            sino.at(a, o) = acc * detail::ray_step;
        }
    }
    return sino;
}

// Exact matrix transpose of radon_forward (same rays, same stencil weights,
// scatter instead of gather).
inline Image radon_adjoint(const Sinogram& sino, const RadonGeometry& g) {
    if (sino.n_angles() != g.n_angles || sino.n_offsets() != g.n_offsets ||
        sino.angle_range() != g.angle_range)
        throw std::invalid_argument("radon_adjoint: sinogram grid does not match geometry");
    Image img(g.image_size);
    double* px = img.pixels().data();
    for (std::size_t a = 0; a < g.n_angles; ++a) {
        for (std::size_t o = 0; o < g.n_offsets; ++o) {
            const double v = sino.at(a, o) * detail::ray_step;
            if (v == 0.0) continue;
            detail::for_each_ray_tap(g, sino, a, o, [&](std::size_t idx, double w) {
                px[idx] += w * v;
            });
        }
    }
    return img;
}

namespace detail {

// Shared row-wise frequency filter: rows are zero-padded to the next power
// of two at least twice the row length, transformed, multiplied by
// `multiplier(folded_bin, padded)`, and cropped back.
template <class Multiplier>
inline Sinogram radial_filter(const Sinogram& sino, Multiplier&& multiplier) {
    Sinogram out(sino.n_angles(), sino.n_offsets(), sino.angle_range(),
                 sino.offset_spacing());
    const std::size_t n = sino.n_offsets();
    const std::size_t padded = next_pow2(2 * n);
    std::vector<std::complex<double>> row(padded);
    for (std::size_t a = 0; a < sino.n_angles(); ++a) {
        for (std::size_t o = 0; o < padded; ++o)
            row[o] = o < n ? std::complex<double>(sino.at(a, o), 0.0)
                           : std::complex<double>(0.0, 0.0);
        fft_inplace(row, false);
        for (std::size_t k = 0; k < padded; ++k) {
            const std::size_t folded = k <= padded / 2 ? k : padded - k;
            row[k] *= multiplier(folded, padded);
        }
        fft_inplace(row, true);
        for (std::size_t o = 0; o < n; ++o) out.at(a, o) = row[o].real();
    }
    return out;
}

}  // namespace detail

// Applies the |frequency| multiplier to every angle row: the absolute
// angular frequency 2*pi*k/(N*spacing) on the zero-padded transform.  The
// zero-frequency component is annihilated; no apodization window is applied.
inline Sinogram riesz_filter(const Sinogram& sino) {
    const double freq_scale =
        2.0 * 3.14159265358979323846 /
        (static_cast<double>(next_pow2(2 * sino.n_offsets())) *
         sino.offset_spacing());
    return detail::radial_filter(sino, [&](std::size_t folded, std::size_t) {
        return freq_scale * static_cast<double>(folded);
    });
}

namespace detail {

// Reconstruction ramp for fbp: the Riesz multiplier divided by the excess
// interpolation-kernel response sinc^3(omega/2).  The projector pair
// convolves radial profiles with two unit triangle kernels (sinc^2 each in
// frequency) while a pixel-integrated image carries a single box kernel
// (sinc^1); compensating the difference makes fbp reproduce pixel-integrated
// edges instead of doubly smoothed ones.
inline Sinogram compensated_ramp(const Sinogram& sino) {
    const double pi = 3.14159265358979323846;
    const double freq_scale =
        2.0 * pi /
        (static_cast<double>(next_pow2(2 * sino.n_offsets())) *
         sino.offset_spacing());
    return radial_filter(sino, [&](std::size_t folded, std::size_t padded) {
        if (folded == 0) return 0.0;
        const double half = pi * static_cast<double>(folded) /
                            static_cast<double>(padded);
        const double sinc = std::sin(half) / half;
        return freq_scale * static_cast<double>(folded) / (sinc * sinc * sinc);
    });
}

}  // namespace detail

// Pixel-driven backprojection: every pixel accumulates the sinogram linearly
// interpolated at its own offset s = x cos(theta) + y sin(theta).  This is
// deliberately NOT the matrix transpose of radon_forward (see radon_adjoint
// for that): the interpolation kernel is applied once instead of twice,
// which keeps reconstructed edges visibly sharper.
inline Image backproject(const Sinogram& sino, const RadonGeometry& g) {
    if (sino.n_angles() != g.n_angles || sino.n_offsets() != g.n_offsets ||
        sino.angle_range() != g.angle_range)
        throw std::invalid_argument("backproject: sinogram grid does not match geometry");
    const std::size_t n = g.image_size;
    const std::size_t no = g.n_offsets;
    const double centre = 0.5 * static_cast<double>(n - 1);
    const double half = 0.5 * static_cast<double>(no - 1);
    Image img(g.image_size);
    double* px = img.pixels().data();
    for (std::size_t a = 0; a < g.n_angles; ++a) {
        const double theta = sino.angle(a);
        const double ct = std::cos(theta) / sino.offset_spacing();
        const double st = std::sin(theta) / sino.offset_spacing();
        const double* row_vals = sino.values().data() + a * no;
        std::size_t idx = 0;
        for (std::size_t row = 0; row < n; ++row) {
            const double y = centre - static_cast<double>(row);
            double u = (-centre) * ct + y * st + half;
            for (std::size_t col = 0; col < n; ++col, ++idx, u += ct) {
                if (u <= -1.0 || u >= static_cast<double>(no)) continue;
                const double fu = std::floor(u);
                const double w = u - fu;
                const long o0 = static_cast<long>(fu);
                double acc = 0.0;
                if (o0 >= 0) acc += (1.0 - w) * row_vals[o0];
                if (o0 + 1 < static_cast<long>(no)) acc += w * row_vals[o0 + 1];
                px[idx] += acc;
            }
        }
    }
    return img;
}

// Filtered backprojection.  The analytic scale for the inversion formula on
// this discretization is 1/(2*n_angles) for both angular ranges; the stored
// per-geometry calibration absorbs the residual discretization bias.
inline Image fbp(const Sinogram& sino, const RadonGeometry& g) {
    Image img = backproject(detail::compensated_ramp(sino), g);
    const double scale =
        g.fbp_calibration / (2.0 * static_cast<double>(g.n_angles));
    for (double& v : img.pixels()) v *= scale;
    return img;
}

// Fixes the scalar FBP calibration from a disk oracle: a centred unit disk
// is projected and reconstructed with calibration 1, and the correction is
// chosen so the reconstructed plateau averages to exactly 1.  Call once at
// geometry construction time.
namespace detail {

inline Image centred_disk(std::size_t n, double radius) {
    Image disk(n);
    const double centre = 0.5 * static_cast<double>(n - 1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const double dy = static_cast<double>(r) - centre;
            const double dx = static_cast<double>(c) - centre;
            if (dx * dx + dy * dy <= radius * radius) disk.at(r, c) = 1.0;
        }
    return disk;
}

// count / sum over the pixels inside the given radius; the reciprocal of the
// reconstructed plateau mean of a unit disk.
inline double plateau_correction(const Image& rec, double radius) {
    const std::size_t n = rec.size();
    const double centre = 0.5 * static_cast<double>(n - 1);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const double dy = static_cast<double>(r) - centre;
            const double dx = static_cast<double>(c) - centre;
            if (dx * dx + dy * dy <= radius * radius) {
                sum += rec.at(r, c);
                ++count;
            }
        }
    if (count == 0 || !(sum > 0.0))
        throw std::runtime_error("plateau_correction: degenerate disk reconstruction");
    return static_cast<double>(count) / sum;
}

}  // namespace detail

inline double calibrate_fbp(RadonGeometry& g) {
    RadonGeometry raw = g;
    raw.fbp_calibration = 1.0;
    const double radius = 0.30 * static_cast<double>(g.image_size);
    const Image disk = detail::centred_disk(g.image_size, radius);
    const Image rec = fbp(radon_forward(disk, raw), raw);
    g.fbp_calibration = detail::plateau_correction(rec, 0.7 * radius);
    return g.fbp_calibration;
}

// Amplitude correction for the exact-adjoint chain
// radon_adjoint(riesz_filter(.)) / (2 n_angles), derived from the same disk
// oracle as calibrate_fbp.  The adjoint scatters the interpolation stencil a
// second time, so its overall gain differs from the pixel-driven fbp chain.
inline double adjoint_calibration(const RadonGeometry& g) {
    const double radius = 0.30 * static_cast<double>(g.image_size);
    const Image disk = detail::centred_disk(g.image_size, radius);
    Image rec = radon_adjoint(riesz_filter(radon_forward(disk, g)), g);
    const double scale = 1.0 / (2.0 * static_cast<double>(g.n_angles));
    for (double& v : rec.pixels()) v *= scale;
    return detail::plateau_correction(rec, 0.7 * radius);
}

// Convenience constructor: validated geometry with the FBP calibration
// already fixed.
inline RadonGeometry make_calibrated_geometry(std::size_t image_size,
                                              std::size_t n_angles,
                                              std::size_t n_offsets,
                                              AngleRange range = AngleRange::half_turn) {
    RadonGeometry g(image_size, n_angles, n_offsets, range);
    calibrate_fbp(g);
    return g;
}

}  // namespace dfdreg
