#pragma once

// Seeded data perturbations calibrated to a requested noise level
//
//   delta = (1 / sqrt(n)) * || y - y_noisy ||_2,
//
// the root-mean-square perturbation per sinogram entry.  Additive kinds
// (gaussian, uniform) hit the target exactly by rescaling one fixed draw;
// intensity-driven kinds (poisson, salt_pepper) tune their parameter by
// bisection against the measured level, re-using the same random draws for
// every candidate so the search is monotone and deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"

namespace dfdreg {

enum class NoiseKind { gaussian, poisson, uniform, salt_pepper };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::salt_pepper: return "salt_pepper";
    }
    return "gaussian";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "poisson") return NoiseKind::poisson;
    if (s == "uniform") return NoiseKind::uniform;
    if (s == "salt_pepper") return NoiseKind::salt_pepper;
    throw std::invalid_argument("unknown noise kind: " + s);
}

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double target_delta = 1.0;
    RngSeed seed{0};
};

// Root-mean-square perturbation between a clean and a noisy sinogram.
inline double noise_level(const Sinogram& clean, const Sinogram& noisy) {
    if (!clean.same_grid(noisy))
        throw std::invalid_argument("noise_level: sinogram grids differ");
    const std::vector<double>& a = clean.values();
    const std::vector<double>& b = noisy.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

// Expected root-mean-square perturbation of fully corrupted salt-and-pepper
// noise: every entry replaced, each by the data minimum or maximum with equal
// probability.  Replacement values come from the sinogram itself, so this is
// a hard ceiling on reachable salt_pepper targets; add_noise rejects targets
// above the realized full-corruption level, which concentrates around this
// value.  Experiment designs should keep targets comfortably below it.
inline double max_salt_pepper_level(const Sinogram& y) {
    if (y.values().empty()) return 0.0;
    const auto [min_it, max_it] =
        std::minmax_element(y.values().begin(), y.values().end());
    const double vmin = *min_it, vmax = *max_it;
    double acc = 0.0;
    for (double v : y.values()) {
        const double a = v - vmin, b = v - vmax;
        acc += 0.5 * (a * a + b * b);
    }
    return std::sqrt(acc / static_cast<double>(y.values().size()));
}

namespace detail {

// delta of an additive pattern with unit scale (pattern holds the raw
// perturbation entries before scaling).
inline double pattern_level(const std::vector<double>& pattern) {
    double acc = 0.0;
    for (double v : pattern) acc += v * v;
    return std::sqrt(acc / static_cast<double>(pattern.size()));
}

inline Sinogram poisson_candidate(const Sinogram& y, double scale, const Rng& base) {
    Rng rng = base.fork(3);  // same substream for every candidate scale
    Sinogram out = y;
    for (double& v : out.values()) {
        const double mean = scale * std::max(v, 0.0);
        v = static_cast<double>(rng.poisson(mean)) / scale;
    }
    return out;
}

}  // namespace detail

inline Sinogram add_noise(const Sinogram& y, const NoiseSpec& spec) {
    if (!(spec.target_delta > 0.0))
        throw std::invalid_argument("add_noise: target_delta must be positive");
    const std::size_t n = y.values().size();
    const Rng base{spec.seed};
    const double rel_tol = 0.005;  // half the 1% calibration contract

    switch (spec.kind) {
        case NoiseKind::gaussian:
        case NoiseKind::uniform: {
            Rng rng = base.fork(spec.kind == NoiseKind::gaussian ? 1 : 2);
            std::vector<double> pattern(n);
            for (double& v : pattern)
                v = spec.kind == NoiseKind::gaussian ? rng.gaussian()
                                                     : rng.uniform(-1.0, 1.0);
            const double level = detail::pattern_level(pattern);
            if (!(level > 0.0))
                throw calibration_error("add_noise: degenerate noise pattern");
            const double scale = spec.target_delta / level;
            Sinogram out = y;
            for (std::size_t i = 0; i < n; ++i) out.values()[i] += scale * pattern[i];
            return out;
        }

        case NoiseKind::poisson: {
            // delta decreases as the photon-count scale grows; bracket the
            // target, then bisect in log-scale.
            double lo = 1.0, hi = 1.0;
            double level_lo = noise_level(y, detail::poisson_candidate(y, lo, base));
            if (!(level_lo > 0.0))
                throw calibration_error(
                    "add_noise: poisson noise vanishes on this sinogram");
            double level_hi = level_lo;
            for (int i = 0; i < 80 && level_lo < spec.target_delta; ++i) {
                lo *= 0.25;
                level_lo = noise_level(y, detail::poisson_candidate(y, lo, base));
            }
            for (int i = 0; i < 80 && level_hi > spec.target_delta; ++i) {
                hi *= 4.0;
                level_hi = noise_level(y, detail::poisson_candidate(y, hi, base));
            }
            if (level_lo < spec.target_delta || level_hi > spec.target_delta)
                throw calibration_error("add_noise: poisson target out of reach");
            // The level is only approximately monotone in the scale (draw
            // paths shift with the mean), so remember the closest candidate.
            double best_scale = lo;
            double best_err = std::abs(level_lo - spec.target_delta);
            for (int iter = 0; iter < 120; ++iter) {
                const double mid = std::sqrt(lo * hi);
                Sinogram candidate = detail::poisson_candidate(y, mid, base);
                const double level = noise_level(y, candidate);
                const double err = std::abs(level - spec.target_delta);
                if (err < best_err) {
                    best_err = err;
                    best_scale = mid;
                }
                if (err <= rel_tol * spec.target_delta) return candidate;
                (level > spec.target_delta ? lo : hi) = mid;
                if (hi / lo < 1.0 + 1e-12) break;
            }
            if (best_err <= 0.01 * spec.target_delta)
                return detail::poisson_candidate(y, best_scale, base);
            throw calibration_error("add_noise: poisson calibration did not converge");
        }

        case NoiseKind::salt_pepper: {
            const auto [min_it, max_it] =
                std::minmax_element(y.values().begin(), y.values().end());
            const double vmin = *min_it, vmax = *max_it;
            if (!(vmax > vmin))
                throw calibration_error(
                    "add_noise: constant sinogram cannot carry salt-and-pepper noise");
            // One fixed draw per entry; entry i is corrupted whenever
            // u[i] < p, so the measured level is non-decreasing in p and
            // identical draws serve every candidate probability.
            Rng rng = base.fork(4);
            std::vector<double> u(n);
            std::vector<double> replacement(n);
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = rng.uniform();
                replacement[i] = (rng.next_u64() & 1) ? vmax : vmin;
            }
            const auto level_at = [&](double p) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (u[i] < p) {
                        const double d = y.values()[i] - replacement[i];
                        acc += d * d;
                    }
                }
                return std::sqrt(acc / static_cast<double>(n));
            };
            if (level_at(1.0) < spec.target_delta)
                throw calibration_error(
                    "add_noise: salt_pepper target exceeds the fully corrupted level");
            double lo = 0.0, hi = 1.0, p = 1.0;
            for (int iter = 0; iter < 200; ++iter) {
                p = 0.5 * (lo + hi);
                const double level = level_at(p);
                if (std::abs(level - spec.target_delta) <= rel_tol * spec.target_delta)
                    break;
                (level > spec.target_delta ? hi : lo) = p;
                if (hi - lo < 1e-15) break;
            }
            if (std::abs(level_at(p) - spec.target_delta) > 0.01 * spec.target_delta)
                throw calibration_error(
                    "add_noise: salt_pepper calibration did not converge");
            Sinogram out = y;
            for (std::size_t i = 0; i < n; ++i)
                if (u[i] < p) out.values()[i] = replacement[i];
            return out;
        }
    }
    throw std::invalid_argument("add_noise: unknown noise kind");
}

}  // namespace dfdreg
