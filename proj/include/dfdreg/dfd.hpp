#pragma once

// Wavelet frame decomposition of the tomography operator.  Each Haar
// coefficient group carries a quasi-singular value kappa; applying the
// filtered backprojection and analysing the result realizes the frame
// analysis functionals without ever materializing them.  The verification
// helper reconstructs individual analysis sinograms explicitly and measures
// how well the backprojected sinogram reproduces the scaled atom.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/haar.hpp"
#include "dfdreg/radon.hpp"

namespace dfdreg {

// Per-level quasi-singular values kappa(l) = kappa0 * 2^{-(levels-l)/2}:
// strictly increasing towards coarse scales, with the approx block sharing
// the coarsest value kappa0.
struct QuasiSingularMap {
    double kappa0 = 1.0;
    int levels = 1;

    QuasiSingularMap() = default;
    QuasiSingularMap(double kappa0_, int levels_) : kappa0(kappa0_), levels(levels_) {
        if (!(kappa0 > 0.0))
            throw std::invalid_argument("QuasiSingularMap: kappa0 must be positive");
        if (levels < 1)
            throw std::invalid_argument("QuasiSingularMap: need at least one level");
    }

    double kappa(int level) const {
        if (level < 1 || level > levels)
            throw std::invalid_argument("QuasiSingularMap: level out of range");
        return kappa0 * std::exp2(-0.5 * static_cast<double>(levels - level));
    }

    double approx_kappa() const noexcept { return kappa0; }

    // Block form used with WaveletField::for_each_block: orientation 0 means
    // the approx block.
    double kappa_for_block(int level, int orientation) const {
        return orientation == 0 ? approx_kappa() : kappa(level);
    }

    double max_kappa() const noexcept { return kappa0; }

    // Distinct kappa values, finest first.  The level-`levels` details and
    // the approx block share kappa0, so there are exactly `levels` entries.
    std::vector<double> distinct_kappas() const {
        std::vector<double> ks;
        ks.reserve(static_cast<std::size_t>(levels));
        for (int l = 1; l <= levels; ++l) ks.push_back(kappa(l));
        return ks;
    }
};

struct DfdContext {
    RadonGeometry geometry;
    int levels = 1;
    QuasiSingularMap kappas;

    DfdContext() = default;

    DfdContext(RadonGeometry geometry_, int levels_, double kappa0 = 1.0)
        : geometry(std::move(geometry_)), levels(levels_),
          kappas(kappa0, levels_) {
        const int p = std::countr_zero(geometry.image_size);
        if (levels < 1 || p < levels + 2)
            throw std::invalid_argument(
                "DfdContext: image size 2^p requires p >= levels + 2");
    }
};

// Frame analysis coefficients <y, v_lambda> of a sinogram: per-level kappa
// times the Haar analysis of the filtered backprojection.
inline WaveletField v_coefficients(const Sinogram& y, const DfdContext& ctx) {
    WaveletField field = haar_analysis(fbp(y, ctx.geometry), ctx.levels);
    field.for_each_block([&](int level, int orientation, std::vector<double>& block) {
        const double k = ctx.kappas.kappa_for_block(level, orientation);
        for (double& v : block) v *= k;
    });
    return field;
}

struct QuasiSingularProbe {
    int level = 0;        // wavelet level (1 = finest); approx probes use
                          // orientation 0 and level = levels
    int orientation = 0;  // 0 approx, 1 horizontal, 2 vertical, 3 diagonal
    std::size_t index = 0;
    double kappa = 0.0;
    double residual = 0.0;  // |A^T v - kappa u| / |kappa u|
};

struct QuasiSingularReport {
    std::vector<QuasiSingularProbe> probes;

    double max_residual(int level) const {
        double worst = 0.0;
        for (const auto& p : probes)
            if (p.level == level && p.residual > worst) worst = p.residual;
        return worst;
    }

    double max_residual() const {
        double worst = 0.0;
        for (const auto& p : probes)
            if (p.residual > worst) worst = p.residual;
        return worst;
    }
};

// Materializes analysis sinograms v_lambda for a sample of coefficients and
// checks the defining relation A^T v_lambda = kappa_lambda u_lambda.  Probes
// are distributed coarse-to-fine so the report always covers the coarsest
// level first; `probes == 0` yields an empty report.
inline QuasiSingularReport verify_quasi_singular(const DfdContext& ctx,
                                                 std::size_t probes, RngSeed seed) {
    QuasiSingularReport report;
    if (probes == 0) return report;
    Rng rng = Rng(seed).fork(0x715u);

    // Candidate blocks, coarsest first: approx, then detail levels J..1.
    std::vector<std::pair<int, int>> blocks;
    blocks.emplace_back(ctx.levels, 0);
    for (int l = ctx.levels; l >= 1; --l)
        for (int beta = 1; beta <= 3; ++beta) blocks.emplace_back(l, beta);

    // The relation is stated for the exact adjoint, whose gain differs from
    // the interpolating fbp chain; re-derive the amplitude correction for it.
    const double fbp_scale =
        adjoint_calibration(ctx.geometry) /
        (2.0 * static_cast<double>(ctx.geometry.n_angles));

    for (std::size_t i = 0; i < probes; ++i) {
        const auto [level, orientation] = blocks[i % blocks.size()];
        WaveletField atom_field(ctx.geometry.image_size, ctx.levels);
        const std::size_t side = atom_field.block_side(level);
        // Keep probe positions away from the border half of the block so the
        // atom support stays inside the scanned disk.
        const std::size_t lo = side / 4, span = side - 2 * (side / 4);
        const std::size_t r = lo + rng.next_u64() % span;
        const std::size_t c = lo + rng.next_u64() % span;
        const std::size_t index = r * side + c;
        auto& block = orientation == 0 ? atom_field.approx()
                                       : atom_field.detail(level, orientation);
        block[index] = 1.0;

        const Image atom = haar_synthesis(atom_field);
        const double kappa = ctx.kappas.kappa_for_block(level, orientation);

        // v_lambda = kappa * fbp_scale * ramp(A u_lambda): the Riesz
        // representer of y -> kappa <fbp(y), u_lambda>.
        Sinogram v = riesz_filter(radon_forward(atom, ctx.geometry));
        for (double& s : v.values()) s *= kappa * fbp_scale;

        const Image back = radon_adjoint(v, ctx.geometry);
        double num = 0.0, den = 0.0;
        for (std::size_t px = 0; px < back.pixels().size(); ++px) {
            const double want = kappa * atom.pixels()[px];
            const double diff = back.pixels()[px] - want;
            num += diff * diff;
            den += want * want;
        }
        QuasiSingularProbe probe;
        probe.level = level;
        probe.orientation = orientation;
        probe.index = index;
        probe.kappa = kappa;
        probe.residual = std::sqrt(num / den);
        report.probes.push_back(probe);
    }
    return report;
}

}  // namespace dfdreg
