#pragma once

// Quadratic comparison families for the stationarity analysis of filtered
// reconstructions.  A family (q_lambda) with constants L and alpha_tilde
// brackets the filter penalties: the filter must shrink at least as much as
// the proximal map of alpha * (q + L t^2 / kappa) and at most as much as
// that of alpha * (q - L t^2 / kappa).  The same family induces the
// absolute symmetric Bregman distance used to measure convergence rates.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/dfd.hpp"
#include "dfdreg/haar.hpp"

namespace dfdreg {

enum class QFamily {
    smallest_q,  // q_lambda(t) = (L/kappa - 1/(2*alpha_tilde)) t^2, the
                 // tightest quadratic meeting the growth condition
    norm_q       // q_lambda(t) = (max kappa) L t^2 / kappa^2, which turns the
                 // Bregman distance into a scaled squared norm
};

inline const char* to_string(QFamily f) {
    return f == QFamily::smallest_q ? "smallest_q" : "norm_q";
}

inline QFamily q_family_from_string(const std::string& s) {
    if (s == "smallest_q") return QFamily::smallest_q;
    if (s == "norm_q") return QFamily::norm_q;
    throw std::invalid_argument("unknown q family: " + s);
}

struct NeighbourSpec {
    double L = 1.0;            // deviation budget between filter and family
    double alpha_tilde = 1.0;  // largest usable regularization strength
    QFamily q_family = QFamily::norm_q;

    // Coefficient of t^2 in q_lambda for the scale with the given kappa.
    double q_coefficient(double kappa, double max_kappa) const {
        if (!(L > 0.0) || !(alpha_tilde > 0.0))
            throw std::invalid_argument(
                "NeighbourSpec: L and alpha_tilde must be positive");
        if (!(kappa > 0.0) || !(max_kappa >= kappa))
            throw std::invalid_argument("NeighbourSpec: bad kappa arguments");
        if (q_family == QFamily::smallest_q)
            return L / kappa - 0.5 / alpha_tilde;
        return max_kappa * L / (kappa * kappa);
    }

    double q(double t, double kappa, double max_kappa) const {
        return q_coefficient(kappa, max_kappa) * t * t;
    }

    double q_prime(double t, double kappa, double max_kappa) const {
        return 2.0 * q_coefficient(kappa, max_kappa) * t;
    }
};

// ---------------------------------------------------------------------------
// Family conditions
// ---------------------------------------------------------------------------

// The comparison family must be smooth with a critical point at the origin,
// and its derivative must grow with slope at least 2L/kappa - 1/alpha_tilde.
struct QFamilyReport {
    bool smooth = true;    // q' matches central differences of q
    bool centered = true;  // q'(0) = 0
    bool slope_ok = true;  // difference quotients of q' meet the lower bound
    bool all_ok() const noexcept { return smooth && centered && slope_ok; }
};

inline QFamilyReport verify_q_conditions(const NeighbourSpec& spec,
                                         const std::vector<double>& kappas,
                                         double t_max = 4.0,
                                         std::size_t n_probes = 41) {
    if (kappas.empty())
        throw std::invalid_argument("verify_q_conditions: empty kappa list");
    if (!(t_max > 0.0) || n_probes < 3)
        throw std::invalid_argument("verify_q_conditions: bad probe grid");
    const double max_kappa = *std::max_element(kappas.begin(), kappas.end());

    QFamilyReport report;
    const double h = 1e-6 * t_max;
    for (double kappa : kappas) {
        const double bound = 2.0 * spec.L / kappa - 1.0 / spec.alpha_tilde;
        if (std::abs(spec.q_prime(0.0, kappa, max_kappa)) > 1e-12)
            report.centered = false;
        double prev_t = -t_max;
        double prev_qp = spec.q_prime(prev_t, kappa, max_kappa);
        for (std::size_t i = 0; i < n_probes; ++i) {
            const double t = -t_max + 2.0 * t_max * static_cast<double>(i) /
                                          static_cast<double>(n_probes - 1);
            const double qp = spec.q_prime(t, kappa, max_kappa);
            const double fd = (spec.q(t + h, kappa, max_kappa) -
                               spec.q(t - h, kappa, max_kappa)) /
                              (2.0 * h);
            if (std::abs(qp - fd) > 1e-6 * std::max(1.0, std::abs(qp)))
                report.smooth = false;
            if (i > 0) {
                const double quotient = (qp - prev_qp) / (t - prev_t);
                if (quotient < bound - 1e-10) report.slope_ok = false;
            }
            prev_t = t;
            prev_qp = qp;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Bregman distance
// ---------------------------------------------------------------------------

// Absolute symmetric Bregman distance of Q(x) = sum_lambda
// q_lambda(kappa_lambda x_lambda):
//   D_Q(x, y) = | sum_lambda kappa_lambda (q'(kappa x) - q'(kappa y)) (x - y) |.
inline double bregman_distance(const NeighbourSpec& spec,
                               const std::vector<double>& kappas,
                               const std::vector<double>& x,
                               const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() != kappas.size())
        throw std::invalid_argument("bregman_distance: size mismatch");
    if (kappas.empty()) return 0.0;
    const double max_kappa = *std::max_element(kappas.begin(), kappas.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double k = kappas[i];
        acc += k *
               (spec.q_prime(k * x[i], k, max_kappa) -
                spec.q_prime(k * y[i], k, max_kappa)) *
               (x[i] - y[i]);
    }
    return std::abs(acc);
}

inline double bregman_distance(const NeighbourSpec& spec,
                               const QuasiSingularMap& kappas,
                               const WaveletField& x, const WaveletField& y) {
    if (x.size() != y.size() || x.levels() != y.levels())
        throw std::invalid_argument("bregman_distance: field shape mismatch");
    const double max_kappa = kappas.max_kappa();
    double acc = 0.0;
    const auto block_term = [&](double k, const std::vector<double>& bx,
                                const std::vector<double>& by) {
        for (std::size_t i = 0; i < bx.size(); ++i)
            acc += k *
                   (spec.q_prime(k * bx[i], k, max_kappa) -
                    spec.q_prime(k * by[i], k, max_kappa)) *
                   (bx[i] - by[i]);
    };
    block_term(kappas.kappa_for_block(x.levels(), 0), x.approx(), y.approx());
    for (int l = 1; l <= x.levels(); ++l)
        for (int beta = 1; beta <= 3; ++beta)
            block_term(kappas.kappa_for_block(l, beta), x.detail(l, beta),
                       y.detail(l, beta));
    return std::abs(acc);
}

}  // namespace dfdreg
