#pragma once

// End-to-end filtered reconstruction: analyze the filtered backprojection
// in the Haar frame, push every coefficient through the scale-aware filter,
// and synthesize the image:
//
//   coefficient c at scale kappa  ->  kappa^{-1} * phi_alpha(kappa, kappa c).
//
// With the identity filter the output equals the filtered backprojection.

#include <vector>

#include "dfdreg/dfd.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/haar.hpp"
#include "dfdreg/radon.hpp"

namespace dfdreg {

// Applies the filter to a coefficient field in place.
inline void filter_coefficients(WaveletField& field, const Filter& f, double alpha,
                                const QuasiSingularMap& kappas) {
    field.for_each_block([&](int level, int orientation, std::vector<double>& block) {
        const double k = kappas.kappa_for_block(level, orientation);
        for (double& c : block) c = f.eval(alpha, k, k * c) / k;
    });
}

inline Image reconstruct(const Sinogram& y, const Filter& f, double alpha,
                         const DfdContext& ctx) {
    WaveletField field = haar_analysis(fbp(y, ctx.geometry), ctx.levels);
    filter_coefficients(field, f, alpha, ctx.kappas);
    return haar_synthesis(field);
}

}  // namespace dfdreg
