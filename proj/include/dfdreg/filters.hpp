#pragma once

// Scalar coefficient filters phi_alpha(kappa, x) used by the regularized
// reconstruction: analytic families (identity, a cubic-core example filter,
// soft thresholding, linear Tikhonov shrinkage) plus learned piecewise-linear
// maps, together with a bracketed-bisection inverse.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "dfdreg/learned.hpp"

namespace dfdreg {

enum class FilterKind { identity, example_cubic, soft_threshold, linear_tikhonov, learned };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::identity: return "identity";
        case FilterKind::example_cubic: return "example_cubic";
        case FilterKind::soft_threshold: return "soft_threshold";
        case FilterKind::linear_tikhonov: return "linear_tikhonov";
        case FilterKind::learned: return "learned";
    }
    return "?";
}

inline FilterKind filter_kind_from_string(const std::string& s) {
    if (s == "identity") return FilterKind::identity;
    if (s == "example_cubic") return FilterKind::example_cubic;
    if (s == "soft_threshold") return FilterKind::soft_threshold;
    if (s == "linear_tikhonov") return FilterKind::linear_tikhonov;
    if (s == "learned") return FilterKind::learned;
    throw std::invalid_argument("unknown filter kind: " + s);
}

namespace detail {

// Odd filter with a cubic core on [-alpha, alpha] and a concave power-law
// continuation beyond it; both branches meet at alpha/3 with slope 1 and the
// whole family tends to the identity as alpha -> 0.
inline double cubic_example(double alpha, double x) {
    const double ax = std::abs(x);
    double v;
    if (ax <= alpha) {
        v = ax * ax * ax / (3.0 * alpha * alpha);
    } else {
        const double base = 3.0 * (1.0 + alpha) * ax / alpha - (2.0 + 3.0 * alpha);
        v = (alpha / 3.0) * std::pow(base, 1.0 / (alpha + 1.0));
    }
    return std::copysign(v, x);
}

}  // namespace detail

class Filter {
public:
    static Filter identity() { return Filter(FilterKind::identity); }
    static Filter example_cubic() { return Filter(FilterKind::example_cubic); }
    static Filter soft_threshold() { return Filter(FilterKind::soft_threshold); }
    static Filter linear_tikhonov() { return Filter(FilterKind::linear_tikhonov); }
    static Filter learned(std::shared_ptr<const MonotoneFilterParams> params) {
        if (!params)
            throw std::invalid_argument("Filter::learned: null parameters");
        Filter f(FilterKind::learned);
        f.params_ = std::move(params);
        return f;
    }

    FilterKind kind() const noexcept { return kind_; }

    const MonotoneFilterParams* params() const noexcept { return params_.get(); }

    // Known-strict kinds; soft thresholding is monotone but constant on
    // [-alpha, alpha], so its inverse is not everywhere single-valued.
    bool strictly_increasing() const noexcept {
        return kind_ != FilterKind::soft_threshold;
    }

    double eval(double alpha, double kappa, double x) const {
        if (!(alpha > 0.0))
            throw std::invalid_argument("eval_filter: alpha must be positive");
        if (!(kappa > 0.0))
            throw std::invalid_argument("eval_filter: kappa must be positive");
        switch (kind_) {
            case FilterKind::identity:
                return x;
            case FilterKind::example_cubic:
                return detail::cubic_example(alpha, x);
            case FilterKind::soft_threshold: {
                const double shrunk = std::abs(x) - alpha;
                return shrunk > 0.0 ? std::copysign(shrunk, x) : 0.0;
            }
            case FilterKind::linear_tikhonov:
                return kappa * kappa * x / (kappa * kappa + alpha);
            case FilterKind::learned:
                // alpha is identified with the training delta and does not
                // enter the evaluation.
                return kappa * eval_learned(*params_, kappa, x / kappa);
        }
        throw std::logic_error("Filter::eval: unreachable");
    }

private:
    explicit Filter(FilterKind kind) : kind_(kind) {}

    FilterKind kind_;
    std::shared_ptr<const MonotoneFilterParams> params_;
};

inline double eval_filter(const Filter& f, double alpha, double kappa, double x) {
    return f.eval(alpha, kappa, x);
}

// Wraps learned parameters as a Filter.
inline Filter filter_from_learned(std::shared_ptr<const MonotoneFilterParams> params) {
    return Filter::learned(std::move(params));
}

inline Filter filter_from_learned(MonotoneFilterParams params) {
    return Filter::learned(
        std::make_shared<const MonotoneFilterParams>(std::move(params)));
}

// Solves phi_alpha(kappa, x) = y by bracketed bisection with automatic
// bracket expansion.  Terminates when |phi(x) - y| <= 1e-10 * max(1, |y|).
// Throws std::range_error if the bracket grows beyond 2^40 and
// std::domain_error when the filter is detected to be non-strictly-monotone
// around the solution (inverse not single-valued).
inline double invert_filter(const Filter& f, double alpha, double kappa, double y) {
    if (!std::isfinite(y))
        throw std::invalid_argument("invert_filter: target must be finite");
    const double tol = 1e-10 * std::max(1.0, std::abs(y));
    const double bracket_limit = 1099511627776.0;  // 2^40

    const auto value = [&](double x) { return f.eval(alpha, kappa, x); };

    double lo = -1.0, hi = 1.0;
    double flo = value(lo), fhi = value(hi);
    while (fhi < y) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        if (hi > bracket_limit)
            throw std::range_error("invert_filter: bracket expansion exceeded 2^40");
        const double next = value(hi);
        if (next < fhi - tol)
            throw std::domain_error("invert_filter: filter decreases during bracketing");
        fhi = next;
    }
    while (flo > y) {
        hi = lo;
        fhi = flo;
        lo *= 2.0;
        if (lo < -bracket_limit)
            throw std::range_error("invert_filter: bracket expansion exceeded 2^40");
        const double next = value(lo);
        if (next > flo + tol)
            throw std::domain_error("invert_filter: filter decreases during bracketing");
        flo = next;
    }

    // Bisect all the way to bracket collapse; this over-delivers on the
    // 1e-10 contract and keeps quadratures built on top of the inverse quiet.
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        x = 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) break;
        const double fx = value(x);
        if (fx == y) break;
        if (fx < y)
            lo = x;
        else
            hi = x;
    }
    if (std::abs(value(x) - y) > tol)
        throw std::domain_error(
            "invert_filter: no solution within tolerance (filter may jump)");

    // Reject solutions inside a flat stretch: there the inverse is a whole
    // interval, not a point.  The probe width is tied to alpha because the
    // built-in flat region (soft thresholding at y = 0) has width 2*alpha.
    const double h = std::max(0.5 * alpha, 1e-6 * (1.0 + std::abs(x)));
    if (!(value(x + h) - value(x - h) > 0.0))
        throw std::domain_error(
            "invert_filter: filter is not strictly increasing near the solution");
    return x;
}

}  // namespace dfdreg
