#pragma once

// Numerical certification of filter conditions.  For a filter and grids of
// alpha, kappa and probe points x this produces a report stating, per
// (alpha, kappa):
//
//   F1  bijectivity certificate on the tested range: strictly increasing
//       across the grid and attaining both signs at the endpoints
//   F2  strict increase across the grid
//   F3  vanishing at the origin (|phi(kappa, 0)| below machine tolerance)
//   F4  identity limit: the L2 deviation from the identity map does not grow
//       when alpha is halved
//
// together with the growth/decay statistics used for the convergence
// analysis: the damping ratio |phi| sqrt(alpha) / (|x| kappa) near the
// origin, the linear growth margin |phi| - K |x|, the lower-envelope ratio
// |phi| / g_kappa(|x|), a nonexpansiveness flag, and membership of |phi|
// between the proximal maps of the two bracket penalties
// alpha (q +- L t^2 / kappa) built from a NeighbourSpec.  Everything here is
// report-only; no function in this header throws on a failed condition.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfdreg/filters.hpp"
#include "dfdreg/io.hpp"
#include "dfdreg/neighbour.hpp"
#include "dfdreg/penalty.hpp"

namespace dfdreg {

// Results for a single (alpha, kappa) pair.
struct FilterCellReport {
    double alpha = 0.0;
    double kappa = 0.0;
    bool f1 = false;
    bool f2 = false;
    bool f3 = false;
    bool f4 = false;
    double phi_at_zero = 0.0;   // |phi(kappa, 0)|
    double deviation_l2 = 0.0;  // trapezoid ||phi - Id||_L2 over the x grid
    double a1_ratio = 0.0;      // max of |phi| sqrt(alpha)/(|x| kappa), |x| <= c alpha/kappa
    double a3_margin = 0.0;     // max of |phi(kappa,x)| - K |x|, x != 0
    double a2_ratio = 0.0;      // min of |phi(kappa,x)| / g_kappa(|x|), x != 0
    bool nonexpansive = false;
    bool neighbour_ok = false;
};

// Aggregates over the kappa grid for one alpha (one row of the report).
struct FilterAlphaSummary {
    double alpha = 0.0;
    bool f1 = false;           // AND over kappa
    bool f2 = false;           // AND over kappa
    double f3_max = 0.0;       // max |phi(kappa, 0)|
    bool f3 = false;           // AND over kappa
    double f4_sum = 0.0;       // sum over kappa of the L2 deviation
    bool f4 = false;           // AND over kappa
    double a1_ratio = 0.0;     // max over kappa
    double a3_margin = 0.0;    // max over kappa
    bool a3_ok = false;        // margin < 0 everywhere
    double a2_ratio = 0.0;     // min over kappa
    bool nonexpansive = false; // AND over kappa
    bool neighbour_ok = false; // AND over kappa
};

struct FilterReport {
    std::vector<double> alphas;
    std::vector<double> kappas;
    std::vector<double> x_grid;
    std::vector<FilterCellReport> cells;  // alpha-major: cells[ai * n_kappa + ki]
    std::vector<FilterAlphaSummary> per_alpha;

    const FilterCellReport& cell(std::size_t ai, std::size_t ki) const {
        return cells.at(ai * kappas.size() + ki);
    }
};

namespace detail {

inline void check_probe_grid(const std::vector<double>& x_grid) {
    if (x_grid.size() < 5)
        throw std::invalid_argument("verify_filter: probe grid too small");
    for (std::size_t i = 1; i < x_grid.size(); ++i)
        if (!(x_grid[i] > x_grid[i - 1]))
            throw std::invalid_argument("verify_filter: probe grid must increase");
    const std::size_t n = x_grid.size();
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(x_grid[i] + x_grid[n - 1 - i]) > 1e-12 * (1.0 + std::abs(x_grid[i])))
            throw std::invalid_argument(
                "verify_filter: probe grid must be symmetric about 0");
}

// Proximal map of the bracket penalty alpha * (q(t) + shift * t^2) at x,
// computed by brute force so the check never leans on the filter identity.
// Returns false when the bracket objective is not strongly convex (the
// verdict is then "cannot certify").
inline bool bracket_prox(const NeighbourSpec& spec, double alpha, double kappa,
                         double max_kappa, double shift, double x_max, double x,
                         double& out) {
    const double coeff = spec.q_coefficient(kappa, max_kappa) + shift;
    const double curvature = 1.0 + 2.0 * alpha * coeff;
    if (!(curvature > 1e-9)) return false;
    // The minimizer of a quadratic bracket lies within |x| / curvature, so
    // pad the search grid accordingly when the penalty is expansive.
    const double reach = 1.05 * std::max(1.0, 1.0 / curvature) * std::max(x_max, 1.0);
    const std::size_t n = 513;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = -reach + 2.0 * reach * static_cast<double>(i) /
                               static_cast<double>(n - 1);
    grid[n / 2] = 0.0;
    ScalarPenalty p = penalty_from_function(
        alpha, kappa, grid,
        [alpha, coeff](double t) { return alpha * coeff * t * t; });
    out = prox_bruteforce(p, x);
    return true;
}

struct CellInputs {
    const Filter* filter = nullptr;
    double alpha = 0.0;
    const std::vector<double>* kappas = nullptr;
    const std::vector<double>* x_grid = nullptr;
    const NeighbourSpec* spec = nullptr;
    const std::function<double(double, double)>* g_family = nullptr;
    double a1_c = 1.0;
    double a3_K = 2.0;
};

inline FilterCellReport verify_cell(const CellInputs& in, double kappa) {
    const Filter& f = *in.filter;
    const std::vector<double>& xs = *in.x_grid;
    const double alpha = in.alpha;
    const double max_kappa = *std::max_element(in.kappas->begin(), in.kappas->end());

    FilterCellReport cell;
    cell.alpha = alpha;
    cell.kappa = kappa;

    std::vector<double> phi(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) phi[i] = f.eval(alpha, kappa, xs[i]);

    // F2: strict increase across the grid.  F1 additionally requires the
    // endpoint values to straddle zero, certifying an onto interval around
    // the origin (bijectivity cannot be checked beyond the tested range).
    cell.f2 = true;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(phi[i] > phi[i - 1])) cell.f2 = false;
    cell.f1 = cell.f2 && phi.front() < 0.0 && phi.back() > 0.0;

    cell.phi_at_zero = std::abs(f.eval(alpha, kappa, 0.0));
    cell.f3 = cell.phi_at_zero <= 1e-12;

    // Trapezoid L2 deviation from the identity map over the probe grid.
    const auto deviation = [&](double a) {
        double acc = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = f.eval(a, kappa, xs[i]) - xs[i];
            const double sq = d * d;
            if (i > 0) acc += 0.5 * (prev + sq) * (xs[i] - xs[i - 1]);
            prev = sq;
        }
        return std::sqrt(acc);
    };
    cell.deviation_l2 = deviation(alpha);
    // Directional probe of the identity limit: halving alpha must not move
    // the filter away from the identity.
    cell.f4 = deviation(0.5 * alpha) <= cell.deviation_l2 + 1e-9 * (1.0 + cell.deviation_l2);

    // Damping ratio near the origin, probed on grid points inside the
    // region plus log-spaced points so the region is never empty.
    const double region = in.a1_c * alpha / kappa;
    const double sqrt_alpha = std::sqrt(alpha);
    cell.a1_ratio = 0.0;
    const auto a1_probe = [&](double x) {
        if (x == 0.0 || std::abs(x) > region) return;
        const double r = std::abs(f.eval(alpha, kappa, x)) * sqrt_alpha /
                         (std::abs(x) * kappa);
        cell.a1_ratio = std::max(cell.a1_ratio, r);
    };
    for (double x : xs) a1_probe(x);
    for (int j = 0; j < 16; ++j) {
        const double x = region * std::pow(10.0, -3.0 * j / 15.0);
        a1_probe(x);
        a1_probe(-x);
    }

    // Growth margin and lower-envelope ratio, excluding the origin.
    cell.a3_margin = -std::numeric_limits<double>::infinity();
    cell.a2_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] == 0.0) continue;
        const double mag = std::abs(phi[i]);
        cell.a3_margin = std::max(cell.a3_margin, mag - in.a3_K * std::abs(xs[i]));
        const double g = (*in.g_family)(kappa, std::abs(xs[i]));
        if (g > 0.0) cell.a2_ratio = std::min(cell.a2_ratio, mag / g);
    }

    cell.nonexpansive = true;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (std::abs(phi[i] - phi[i - 1]) > (xs[i] - xs[i - 1]) + 1e-10)
            cell.nonexpansive = false;

    // Membership between the two bracket proximal maps.
    cell.neighbour_ok = true;
    const double x_max = std::max(std::abs(xs.front()), std::abs(xs.back()));
    const double L_over_kappa = in.spec->L / kappa;
    for (std::size_t i = 0; i < xs.size() && cell.neighbour_ok; ++i) {
        double lower = 0.0, upper = 0.0;
        if (!bracket_prox(*in.spec, alpha, kappa, max_kappa, +L_over_kappa, x_max,
                          xs[i], lower) ||
            !bracket_prox(*in.spec, alpha, kappa, max_kappa, -L_over_kappa, x_max,
                          xs[i], upper)) {
            cell.neighbour_ok = false;
            break;
        }
        const double mag = std::abs(phi[i]);
        const double slack = 1e-7 * (1.0 + std::abs(xs[i]));
        if (mag < std::abs(lower) - slack || mag > std::abs(upper) + slack)
            cell.neighbour_ok = false;
    }
    return cell;
}

inline FilterAlphaSummary summarize_alpha(const std::vector<FilterCellReport>& cells,
                                          double alpha) {
    FilterAlphaSummary s;
    s.alpha = alpha;
    s.f1 = s.f2 = s.f3 = s.f4 = true;
    s.nonexpansive = s.neighbour_ok = true;
    s.a3_ok = true;
    s.a3_margin = -std::numeric_limits<double>::infinity();
    s.a2_ratio = std::numeric_limits<double>::infinity();
    for (const FilterCellReport& c : cells) {
        s.f1 = s.f1 && c.f1;
        s.f2 = s.f2 && c.f2;
        s.f3 = s.f3 && c.f3;
        s.f4 = s.f4 && c.f4;
        s.f3_max = std::max(s.f3_max, c.phi_at_zero);
        s.f4_sum += c.deviation_l2;
        s.a1_ratio = std::max(s.a1_ratio, c.a1_ratio);
        s.a3_margin = std::max(s.a3_margin, c.a3_margin);
        s.a2_ratio = std::min(s.a2_ratio, c.a2_ratio);
        s.nonexpansive = s.nonexpansive && c.nonexpansive;
        s.neighbour_ok = s.neighbour_ok && c.neighbour_ok;
    }
    s.a3_ok = s.a3_margin < 0.0;
    return s;
}

inline std::function<double(double, double)> default_g_family() {
    return [](double kappa, double t) { return kappa * kappa * t; };
}

}  // namespace detail

// Verifies one filter across an (alpha, kappa, x) grid.  `g_family` is the
// per-kappa increasing lower envelope for the A2 ratio; the default is
// g_kappa(t) = kappa^2 t.  `a1_c` scales the near-origin probe region
// |x| <= a1_c * alpha / kappa and `a3_K` is the linear growth constant.
inline FilterReport verify_filter(
    const Filter& f, const std::vector<double>& alphas,
    const std::vector<double>& kappas, const std::vector<double>& x_grid,
    const NeighbourSpec& spec,
    std::function<double(double, double)> g_family = {}, double a1_c = 1.0,
    double a3_K = 2.0) {
    if (alphas.empty() || kappas.empty())
        throw std::invalid_argument("verify_filter: empty alpha or kappa grid");
    detail::check_probe_grid(x_grid);
    for (double a : alphas)
        if (!(a > 0.0)) throw std::invalid_argument("verify_filter: alpha must be positive");
    for (double k : kappas)
        if (!(k > 0.0)) throw std::invalid_argument("verify_filter: kappa must be positive");
    if (!g_family) g_family = detail::default_g_family();

    FilterReport report;
    report.alphas = alphas;
    report.kappas = kappas;
    report.x_grid = x_grid;
    for (double alpha : alphas) {
        detail::CellInputs in;
        in.filter = &f;
        in.alpha = alpha;
        in.kappas = &kappas;
        in.x_grid = &x_grid;
        in.spec = &spec;
        in.g_family = &g_family;
        in.a1_c = a1_c;
        in.a3_K = a3_K;
        std::vector<FilterCellReport> row;
        row.reserve(kappas.size());
        for (double kappa : kappas) row.push_back(detail::verify_cell(in, kappa));
        report.per_alpha.push_back(detail::summarize_alpha(row, alpha));
        report.cells.insert(report.cells.end(), row.begin(), row.end());
    }
    return report;
}

// Bank variant: one filter per alpha entry (used for learned filters, where
// each noise level has its own parameters and alpha is the training delta).
inline FilterReport verify_filter(
    const std::vector<std::pair<double, Filter>>& bank,
    const std::vector<double>& kappas, const std::vector<double>& x_grid,
    const NeighbourSpec& spec,
    std::function<double(double, double)> g_family = {}, double a1_c = 1.0,
    double a3_K = 2.0) {
    if (bank.empty())
        throw std::invalid_argument("verify_filter: empty filter bank");
    FilterReport report;
    report.kappas = kappas;
    report.x_grid = x_grid;
    for (const auto& [alpha, f] : bank) {
        FilterReport one =
            verify_filter(f, {alpha}, kappas, x_grid, spec, g_family, a1_c, a3_K);
        report.alphas.push_back(alpha);
        report.cells.insert(report.cells.end(), one.cells.begin(), one.cells.end());
        report.per_alpha.push_back(one.per_alpha.front());
    }
    return report;
}

// JSON serialization, one object per alpha keyed by its decimal value.
inline nlohmann::json filter_report_to_json(const FilterReport& report) {
    nlohmann::json out = nlohmann::json::object();
    char key[40];
    for (const FilterAlphaSummary& s : report.per_alpha) {
        std::snprintf(key, sizeof(key), "%.12g", s.alpha);
        out[key] = {
            {"F1", s.f1},
            {"F2", s.f2},
            {"F3_max", s.f3_max},
            {"F4_sum", s.f4_sum},
            {"A1_ratio", s.a1_ratio},
            {"A3_ok", s.a3_ok},
            {"A2_ratio", s.a2_ratio},
            {"nonexpansive", s.nonexpansive},
            {"neighbour_ok", s.neighbour_ok},
        };
    }
    return out;
}

}  // namespace dfdreg
