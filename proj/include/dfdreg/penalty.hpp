#pragma once

// Variational side of the coefficient filters.  A strictly increasing filter
// x -> phi_alpha(kappa, x) corresponds to the penalty
//
//   s(x) = integral_0^x phi^{-1}(y) dy - x^2 / 2,
//
// whose proximal map reproduces the filter.  This header builds such
// penalties by adaptive trapezoid quadrature of the numeric inverse,
// evaluates proximal points by direct minimization (brute-force grid scan
// plus golden-section refinement), assembles the coefficient-space
// regularizer, and checks its analytic gradient against central differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/dfd.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/haar.hpp"

namespace dfdreg {

namespace detail {

// Adaptive trapezoid quadrature with Richardson-accepted panels.  The
// returned panel value is the extrapolated refinement, so accepted panels
// are far more accurate than the acceptance tolerance itself.
template <class F>
inline double adaptive_trapezoid_panel(const F& f, double a, double b, double fa,
                                       double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double coarse = 0.5 * (b - a) * (fa + fb);
    const double fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if (depth <= 0 || std::abs(fine - coarse) <= 3.0 * tol)
        return fine + (fine - coarse) / 3.0;
    return adaptive_trapezoid_panel(f, a, m, fa, fm, 0.5 * tol, depth - 1) +
           adaptive_trapezoid_panel(f, m, b, fm, fb, 0.5 * tol, depth - 1);
}

template <class F>
inline double adaptive_trapezoid(const F& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    return adaptive_trapezoid_panel(f, a, b, f(a), f(b), tol, 48);
}

}  // namespace detail

// Tabulated scalar penalty s for one (alpha, kappa) pair.  Off-grid values
// are exact: they continue the quadrature from the nearest grid node (or
// call a closed-form evaluator when the penalty was built from a function).
class ScalarPenalty {
public:
    double alpha() const noexcept { return core_->alpha; }
    double kappa() const noexcept { return core_->kappa; }
    const std::vector<double>& grid() const noexcept { return core_->grid; }
    const std::vector<double>& values() const noexcept { return core_->values; }
    const std::vector<double>& derivs() const noexcept { return core_->derivs; }

    double eval(double t) const {
        const Core& c = *core_;
        if (c.direct) return c.direct(t);
        // Continue the inverse-filter quadrature from the nearest node.
        const auto it = std::lower_bound(c.grid.begin(), c.grid.end(), t);
        std::size_t i = static_cast<std::size_t>(it - c.grid.begin());
        if (i == c.grid.size()) --i;
        if (i > 0 && std::abs(t - c.grid[i - 1]) < std::abs(t - c.grid[i])) --i;
        const double base = c.grid[i];
        const double tail = detail::adaptive_trapezoid(
            [&](double u) { return invert_filter(c.filter, c.alpha, c.kappa, u); },
            base, t, 1e-11);
        return c.integrals[i] + tail - 0.5 * t * t;
    }

private:
    friend ScalarPenalty penalty_from_filter(const Filter&, double, double,
                                             const std::vector<double>&);
    friend ScalarPenalty penalty_from_function(double, double,
                                               const std::vector<double>&,
                                               std::function<double(double)>);

    struct Core {
        Filter filter = Filter::identity();
        double alpha = 1.0;
        double kappa = 1.0;
        std::vector<double> grid;
        std::vector<double> integrals;  // integral of phi^{-1} from 0 to node
        std::vector<double> values;     // s at nodes
        std::vector<double> derivs;     // s' at nodes
        std::function<double(double)> direct;
    };

    explicit ScalarPenalty(std::shared_ptr<const Core> core) : core_(std::move(core)) {}

    std::shared_ptr<const Core> core_;
};

namespace detail {

inline std::size_t checked_zero_index(const std::vector<double>& grid) {
    if (grid.size() < 3)
        throw std::invalid_argument("penalty grid needs at least three nodes");
    std::size_t zero = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("penalty grid must be strictly increasing");
        if (grid[i] == 0.0) zero = i;
    }
    if (zero == grid.size())
        throw std::invalid_argument("penalty grid must contain 0");
    return zero;
}

}  // namespace detail

// Builds the penalty for a strictly increasing filter on the given grid
// (which must be strictly increasing and contain 0).  s(0) = 0 by
// construction and s'(x) = phi^{-1}(x) - x exactly at the nodes.
inline ScalarPenalty penalty_from_filter(const Filter& f, double alpha, double kappa,
                                         const std::vector<double>& grid) {
    const std::size_t zero = detail::checked_zero_index(grid);
    auto core = std::make_shared<ScalarPenalty::Core>();
    core->filter = f;
    core->alpha = alpha;
    core->kappa = kappa;
    core->grid = grid;
    const std::size_t n = grid.size();

    const auto inverse = [&](double y) { return invert_filter(f, alpha, kappa, y); };

    core->integrals.assign(n, 0.0);
    for (std::size_t i = zero + 1; i < n; ++i)
        core->integrals[i] = core->integrals[i - 1] +
                             detail::adaptive_trapezoid(inverse, grid[i - 1], grid[i], 1e-9);
    for (std::size_t i = zero; i-- > 0;)
        core->integrals[i] = core->integrals[i + 1] -
                             detail::adaptive_trapezoid(inverse, grid[i], grid[i + 1], 1e-9);

    core->values.resize(n);
    core->derivs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        core->values[i] = core->integrals[i] - 0.5 * grid[i] * grid[i];
        core->derivs[i] = inverse(grid[i]) - grid[i];
    }
    return ScalarPenalty(std::move(core));
}

// Penalty given directly as a function (used for the closed-form bracket
// penalties in the stationary-neighbourhood check).  `s` must satisfy
// s(0) = 0; values and derivatives are tabulated from it.
inline ScalarPenalty penalty_from_function(double alpha, double kappa,
                                           const std::vector<double>& grid,
                                           std::function<double(double)> s) {
    detail::checked_zero_index(grid);
    auto core = std::make_shared<ScalarPenalty::Core>();
    core->alpha = alpha;
    core->kappa = kappa;
    core->grid = grid;
    const std::size_t n = grid.size();
    core->values.resize(n);
    core->derivs.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) core->values[i] = s(grid[i]);
    core->direct = std::move(s);
    return ScalarPenalty(std::move(core));
}

// Proximal point of the penalty at x: the minimizer of
// 0.5 * (x - t)^2 + s(t).  Direct minimization only — grid argmin followed
// by golden-section refinement over the winning cell and its neighbours —
// so it serves as an independent oracle for the filter itself.
inline double prox_bruteforce(const ScalarPenalty& p, double x) {
    const std::vector<double>& grid = p.grid();
    const std::vector<double>& values = p.values();
    if (x < grid.front() || x > grid.back())
        throw std::range_error("prox_bruteforce: point outside tabulated grid");
    const auto objective = [&](double t) {
        const double d = x - t;
        return 0.5 * d * d + p.eval(t);
    };

    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = x - grid[i];
        const double v = 0.5 * d * d + values[i];
        if (i == 0 || v < best_value) {
            best = i;
            best_value = v;
        }
    }

    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    if (lo == hi) return lo;

    // Golden-section search; the objective is convex for penalties built
    // from strictly increasing filters, so the bracket contains the minimum.
    const double inv_phi = 0.61803398874989484820;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c), fd = objective(d);
    for (int iter = 0; iter < 120 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b));
         ++iter) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Coefficient-space regularizer
// ---------------------------------------------------------------------------

namespace detail {

// integral_0^{b} phi_alpha(kappa, .)^{-1} minus b^2/2, by the same adaptive
// trapezoid rule as penalty_from_filter.
inline double penalty_value_direct(const Filter& f, double alpha, double kappa,
                                   double b) {
    const double integral = adaptive_trapezoid(
        [&](double u) { return invert_filter(f, alpha, kappa, u); }, 0.0, b, 1e-9);
    return integral - 0.5 * b * b;
}

}  // namespace detail

// R_alpha(w) = sum_lambda s_{alpha,lambda}(kappa_lambda * w_lambda) for a
// plain coefficient vector with per-coefficient kappas.
inline double kappa_regularizer(const Filter& f, double alpha,
                                const std::vector<double>& kappas,
                                const std::vector<double>& w) {
    if (w.size() != kappas.size())
        throw std::invalid_argument("kappa_regularizer: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        acc += detail::penalty_value_direct(f, alpha, kappas[i], kappas[i] * w[i]);
    return acc;
}

// Same for a wavelet coefficient field with level kappas.
inline double kappa_regularizer(const Filter& f, double alpha,
                                const QuasiSingularMap& kappas,
                                const WaveletField& w) {
    double acc = 0.0;
    w.for_each_block([&](int level, int orientation, const std::vector<double>& block) {
        const double k = kappas.kappa_for_block(level, orientation);
        for (double v : block)
            acc += detail::penalty_value_direct(f, alpha, k, k * v);
    });
    return acc;
}

// Analytic gradient of the regularizer:
// (d/dw_i) R_alpha(w) = kappa_i * (phi^{-1}(kappa_i w_i) - kappa_i w_i).
inline double regularizer_gradient(const Filter& f, double alpha, double kappa,
                                   double w) {
    return kappa * (invert_filter(f, alpha, kappa, kappa * w) - kappa * w);
}

// Compares the analytic gradient against central differences of the full
// regularizer on a random subset of coefficients and returns the largest
// relative error, with max(1, |analytic|) in the denominator.
inline double regularizer_gradient_check(const Filter& f, double alpha,
                                         const std::vector<double>& kappas,
                                         const std::vector<double>& w, double step,
                                         std::size_t probes, RngSeed seed) {
    if (w.size() != kappas.size())
        throw std::invalid_argument("regularizer_gradient_check: size mismatch");
    Rng rng = Rng(seed).fork(0x67adU);
    double worst = 0.0;
    std::vector<double> probe = w;
    for (std::size_t p = 0; p < probes; ++p) {
        const std::size_t i = rng.next_u64() % w.size();
        const double analytic = regularizer_gradient(f, alpha, kappas[i], w[i]);
        probe[i] = w[i] + step;
        const double plus = kappa_regularizer(f, alpha, kappas, probe);
        probe[i] = w[i] - step;
        const double minus = kappa_regularizer(f, alpha, kappas, probe);
        probe[i] = w[i];
        const double numeric = (plus - minus) / (2.0 * step);
        const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace dfdreg
