#pragma once

// Learned monotone coefficient maps.  Each scale block stores a strictly
// increasing piecewise-linear function through the origin: fixed knots, one
// slope per piece parameterized as exp(raw_slope) so positivity (and with it
// strict monotonicity and invertibility) holds for every parameter choice.
// Outside the knot range the map continues linearly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfdreg/core.hpp"

namespace dfdreg {

struct ScaleBlock {
    double kappa = 0.0;
    std::vector<double> knots;          // strictly increasing, straddling 0
    std::vector<double> raw_slopes;     // size knots.size() + 1
    std::vector<double> values_at_knots;  // cached integral of exp(raw_slopes)

    // Rebuilds the cached integral so that the map is exactly 0 at 0.
    void refresh() {
        const std::size_t K = knots.size();
        values_at_knots.assign(K, 0.0);
        // Piece j covers (knots[j-1], knots[j]); piece 0 and piece K are the
        // linear extensions.  jz is the piece containing 0.
        const std::size_t jz = static_cast<std::size_t>(
            std::upper_bound(knots.begin(), knots.end(), 0.0) - knots.begin());
        const double s_jz = std::exp(raw_slopes[jz]);
        if (jz < K) values_at_knots[jz] = s_jz * knots[jz];
        if (jz > 0) values_at_knots[jz - 1] = s_jz * knots[jz - 1];
        for (std::size_t i = jz + 1; i < K; ++i)
            values_at_knots[i] = values_at_knots[i - 1] +
                                 std::exp(raw_slopes[i]) * (knots[i] - knots[i - 1]);
        for (std::size_t i = jz; i-- > 1;)
            values_at_knots[i - 1] = values_at_knots[i] -
                                     std::exp(raw_slopes[i]) * (knots[i] - knots[i - 1]);
    }

    double eval(double x) const {
        const std::size_t K = knots.size();
        const std::size_t j = static_cast<std::size_t>(
            std::upper_bound(knots.begin(), knots.end(), x) - knots.begin());
        if (j == 0) return values_at_knots[0] + std::exp(raw_slopes[0]) * (x - knots[0]);
        return values_at_knots[j - 1] +
               std::exp(raw_slopes[std::min(j, K)]) * (x - knots[j - 1]);
    }

    // Signed overlap of [0, x] with each linear piece; used for analytic
    // training gradients.  Calls f(piece_index, signed_length) for every
    // piece with non-zero overlap.
    template <class F>
    void for_each_piece_overlap(double x, F&& f) const {
        const double lo = std::min(0.0, x), hi = std::max(0.0, x);
        const double sign = x < 0.0 ? -1.0 : 1.0;
        const std::size_t K = knots.size();
        for (std::size_t j = 0; j <= K; ++j) {
            const double piece_lo = j == 0 ? -1e300 : knots[j - 1];
            const double piece_hi = j == K ? 1e300 : knots[j];
            const double overlap = std::min(hi, piece_hi) - std::max(lo, piece_lo);
            if (overlap > 0.0) f(j, sign * overlap);
        }
    }
};

struct MonotoneFilterParams {
    std::vector<ScaleBlock> scales;  // one block per distinct kappa
    double delta = 0.0;              // training noise level, reused as alpha
    std::string noise_kind = "gaussian";
    std::uint64_t seed = 0;

    void refresh() {
        for (auto& s : scales) s.refresh();
    }

    const ScaleBlock& block_for(double kappa) const {
        for (const auto& s : scales) {
            const double tol = 1e-9 * std::max(1.0, std::abs(kappa));
            if (std::abs(s.kappa - kappa) <= tol) return s;
        }
        throw std::invalid_argument("MonotoneFilterParams: no scale block for kappa " +
                                    std::to_string(kappa));
    }

    ScaleBlock& block_for(double kappa) {
        return const_cast<ScaleBlock&>(
            static_cast<const MonotoneFilterParams&>(*this).block_for(kappa));
    }
};

namespace detail {

inline void validate_block(const ScaleBlock& b, std::size_t index) {
    const std::string where = "scale block " + std::to_string(index);
    if (!(b.kappa > 0.0))
        throw format_error(where + ": kappa must be positive", 0);
    if (b.knots.size() < 2)
        throw format_error(where + ": need at least two knots", 0);
    if (b.raw_slopes.size() != b.knots.size() + 1)
        throw format_error(where + ": raw_slopes must have knots + 1 entries", 0);
    for (std::size_t i = 0; i < b.knots.size(); ++i) {
        if (!std::isfinite(b.knots[i]))
            throw format_error(where + ": non-finite knot", 0);
        if (i > 0 && !(b.knots[i] > b.knots[i - 1]))
            throw format_error(where + ": knots not strictly increasing", 0);
    }
    if (!(b.knots.front() < 0.0) || !(b.knots.back() > 0.0))
        throw format_error(where + ": knot range must straddle 0", 0);
    for (double r : b.raw_slopes)
        if (!std::isfinite(r))
            throw format_error(where + ": non-finite raw slope", 0);
}

inline void validate_params(const MonotoneFilterParams& p) {
    if (p.scales.empty())
        throw format_error("filter parameters contain no scale blocks", 0);
    for (std::size_t i = 0; i < p.scales.size(); ++i) {
        validate_block(p.scales[i], i);
        for (std::size_t j = i + 1; j < p.scales.size(); ++j)
            if (std::abs(p.scales[i].kappa - p.scales[j].kappa) <=
                1e-9 * std::max(1.0, std::abs(p.scales[i].kappa)))
                throw format_error("scale blocks " + std::to_string(i) + " and " +
                                       std::to_string(j) + " share the same kappa",
                                   0);
    }
}

}  // namespace detail

// Evaluates the learned coefficient map for the scale with the given kappa.
// Unknown kappa values are rejected.
inline double eval_learned(const MonotoneFilterParams& params, double kappa, double x) {
    return params.block_for(kappa).eval(x);
}

// Identity-initialized parameter set: uniform knots on [-range, range] and
// all raw slopes zero (slope exp(0) = 1 everywhere).
inline MonotoneFilterParams identity_params(const std::vector<double>& kappas,
                                            std::size_t n_knots = 63,
                                            double range = 1.0) {
    if (n_knots < 2)
        throw std::invalid_argument("identity_params: need at least two knots");
    if (!(range > 0.0))
        throw std::invalid_argument("identity_params: range must be positive");
    MonotoneFilterParams params;
    for (double kappa : kappas) {
        ScaleBlock block;
        block.kappa = kappa;
        block.knots.resize(n_knots);
        for (std::size_t i = 0; i < n_knots; ++i)
            block.knots[i] = range * (2.0 * static_cast<double>(i) /
                                          static_cast<double>(n_knots - 1) -
                                      1.0);
        block.raw_slopes.assign(n_knots + 1, 0.0);
        params.scales.push_back(std::move(block));
    }
    detail::validate_params(params);
    params.refresh();
    return params;
}

inline nlohmann::json params_to_json(const MonotoneFilterParams& p) {
    nlohmann::json scales = nlohmann::json::array();
    for (const auto& b : p.scales)
        scales.push_back({{"kappa", b.kappa},
                          {"knots", b.knots},
                          {"raw_slopes", b.raw_slopes}});
    return nlohmann::json{{"scales", scales},
                          {"delta", p.delta},
                          {"noise_kind", p.noise_kind},
                          {"seed", p.seed}};
}

inline MonotoneFilterParams params_from_json(const nlohmann::json& j) {
    MonotoneFilterParams p;
    try {
        for (const auto& jb : j.at("scales")) {
            ScaleBlock b;
            b.kappa = jb.at("kappa").get<double>();
            b.knots = jb.at("knots").get<std::vector<double>>();
            b.raw_slopes = jb.at("raw_slopes").get<std::vector<double>>();
            p.scales.push_back(std::move(b));
        }
        p.delta = j.at("delta").get<double>();
        p.noise_kind = j.at("noise_kind").get<std::string>();
        p.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("invalid filter parameter JSON: ") + e.what(), 0);
    }
    detail::validate_params(p);
    p.refresh();
    return p;
}

}  // namespace dfdreg

#include "dfdreg/io.hpp"

namespace dfdreg {

inline void save_params(const MonotoneFilterParams& p, const std::string& path) {
    write_json(params_to_json(p), path);
}

inline MonotoneFilterParams load_params(const std::string& path) {
    return params_from_json(read_json(path));
}

}  // namespace dfdreg
