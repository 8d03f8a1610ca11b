#pragma once

// Training of the learned coefficient maps.  Because the frame is
// orthonormal, the image-space reconstruction loss separates into
// independent one-dimensional regressions per scale block: inputs are
// coefficients of the filtered backprojection of noisy data, targets are
// the coefficients of the clean image.  Each block is fitted by full-batch
// gradient descent on the raw (log) slopes of its piecewise-linear map,
// with the slopes projected into a box that certifies the growth conditions
// used by the convergence analysis:
//
//   slope in [1.0001 * kappa^2, 1.9]
//
// so that kappa^2 |x| < |phi(kappa, x)| < 2 |x| holds for every x != 0 by
// construction, not merely by measurement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/dfd.hpp"
#include "dfdreg/haar.hpp"
#include "dfdreg/learned.hpp"
#include "dfdreg/noise.hpp"
#include "dfdreg/radon.hpp"

namespace dfdreg {

struct TrainConfig {
    double delta = 8.0;
    NoiseKind noise_kind = NoiseKind::gaussian;
    std::size_t n_train = 40;
    std::size_t n_val = 8;
    std::size_t epochs = 60;
    double learning_rate = 1.0;  // fraction of the per-block safe step
    double lr_decay = 1.0;       // multiplicative, applied after each epoch
    std::size_t knots = 63;
    double range = 0.0;  // knot half-range; 0 = data-driven per scale
    RngSeed seed{0};

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (!(lr_decay > 0.0) || lr_decay > 1.0)
            throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("TrainConfig: learning_rate must be positive");
        if (knots < 2) throw std::invalid_argument("TrainConfig: need at least two knots");
        if (delta < 0.0)
            throw std::invalid_argument("TrainConfig: delta must be non-negative");
    }
};

// Input/target coefficient pairs for one scale block.
struct ScalePairs {
    double kappa = 0.0;
    std::vector<double> inputs;   // coefficients of FBP of noisy data
    std::vector<double> targets;  // coefficients of the clean image
};

struct TrainingSet {
    std::vector<ScalePairs> train;  // one entry per distinct kappa
    std::vector<ScalePairs> val;
    std::size_t n_train_images = 0;
    std::size_t n_val_images = 0;
};

namespace detail {

inline std::size_t scale_index_for(const std::vector<double>& kappas, double kappa) {
    for (std::size_t i = 0; i < kappas.size(); ++i)
        if (std::abs(kappas[i] - kappa) <= 1e-9 * std::max(kappas[i], kappa)) return i;
    throw std::invalid_argument("training: no scale block for kappa " +
                                std::to_string(kappa));
}

inline void append_image_pairs(std::vector<ScalePairs>& scales,
                               const std::vector<double>& kappas, const Image& clean,
                               const Image& fbp_image, const DfdContext& ctx) {
    WaveletField target = haar_analysis(clean, ctx.levels);
    WaveletField input = haar_analysis(fbp_image, ctx.levels);
    target.for_each_block([&](int level, int orientation,
                              const std::vector<double>& t_block) {
        const double k = ctx.kappas.kappa_for_block(level, orientation);
        ScalePairs& dst = scales[scale_index_for(kappas, k)];
        const std::vector<double>& c_block = orientation == 0
                                                 ? input.approx()
                                                 : input.detail(level, orientation);
        dst.inputs.insert(dst.inputs.end(), c_block.begin(), c_block.end());
        dst.targets.insert(dst.targets.end(), t_block.begin(), t_block.end());
    });
}

}  // namespace detail

// Builds the per-scale regression data.  The first n_train images feed the
// training lists, the following n_val images the validation lists.  Noise
// is drawn from a per-image substream of cfg.seed, so the set is
// reproducible and independent of processing order.  delta = 0 skips the
// perturbation entirely.
inline TrainingSet build_training_pairs(const std::vector<Image>& images,
                                        const TrainConfig& cfg, const DfdContext& ctx) {
    cfg.validate();
    if (images.size() < cfg.n_train + cfg.n_val)
        throw std::invalid_argument("build_training_pairs: not enough images");
    const std::vector<double> kappas = ctx.kappas.distinct_kappas();

    TrainingSet set;
    set.n_train_images = cfg.n_train;
    set.n_val_images = cfg.n_val;
    for (auto* part : {&set.train, &set.val}) {
        part->resize(kappas.size());
        for (std::size_t i = 0; i < kappas.size(); ++i) (*part)[i].kappa = kappas[i];
    }

    const Rng base{cfg.seed};
    for (std::size_t i = 0; i < cfg.n_train + cfg.n_val; ++i) {
        const Image& x = images[i];
        if (x.size() != ctx.geometry.image_size)
            throw std::invalid_argument("build_training_pairs: image size mismatch");
        Sinogram y = radon_forward(x, ctx.geometry);
        if (cfg.delta > 0.0) {
            NoiseSpec spec;
            spec.kind = cfg.noise_kind;
            spec.target_delta = cfg.delta;
            spec.seed = RngSeed{base.fork(11, i).root_seed()};
            y = add_noise(y, spec);
        }
        const Image recon = fbp(y, ctx.geometry);
        detail::append_image_pairs(i < cfg.n_train ? set.train : set.val, kappas, x,
                                   recon, ctx);
    }
    return set;
}

// Mean reconstruction loss per image: sum over all coefficients of the
// squared residual, divided by the number of images.  By orthonormality of
// the frame this equals the mean squared image-space distance.
inline double training_loss(const std::vector<ScalePairs>& scales,
                            std::size_t n_images, const MonotoneFilterParams& params) {
    if (n_images == 0) return 0.0;
    double acc = 0.0;
    for (const ScalePairs& sp : scales) {
        const ScaleBlock& block = params.block_for(sp.kappa);
        for (std::size_t i = 0; i < sp.inputs.size(); ++i) {
            const double r = block.eval(sp.inputs[i]) - sp.targets[i];
            acc += r * r;
        }
    }
    return acc / static_cast<double>(n_images);
}

// Gradient of the summed block loss sum_i (psi(c_i) - t_i)^2 with respect
// to the raw slopes, using d psi(x) / d raw_j = exp(raw_j) * overlap_j(x).
inline std::vector<double> training_gradient(const ScalePairs& pairs,
                                             const ScaleBlock& block) {
    std::vector<double> grad(block.raw_slopes.size(), 0.0);
    for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
        const double c = pairs.inputs[i];
        const double resid = block.eval(c) - pairs.targets[i];
        block.for_each_piece_overlap(c, [&](std::size_t j, double overlap) {
            grad[j] += 2.0 * resid * std::exp(block.raw_slopes[j]) * overlap;
        });
    }
    return grad;
}

struct TrainResult {
    MonotoneFilterParams params;       // best-validation snapshot
    std::vector<double> train_loss;    // entry 0 = before the first update
    std::vector<double> val_loss;      // empty validation -> copies train loss
    std::size_t best_epoch = 0;
};

inline TrainResult train(const TrainingSet& set, const TrainConfig& cfg) {
    cfg.validate();
    if (set.train.empty())
        throw std::invalid_argument("train: empty training set");
    bool any = false;
    for (const ScalePairs& sp : set.train) any = any || !sp.inputs.empty();
    if (!any) throw std::invalid_argument("train: no training pairs");

    // Initialize one identity block per scale; the knot range follows the
    // data unless the configuration pins it.
    MonotoneFilterParams params;
    params.delta = cfg.delta;
    params.noise_kind = to_string(cfg.noise_kind);
    params.seed = cfg.seed.value;
    for (const ScalePairs& sp : set.train) {
        double range = cfg.range;
        if (!(range > 0.0)) {
            std::vector<double> mags;
            mags.reserve(sp.inputs.size());
            for (double c : sp.inputs) mags.push_back(std::abs(c));
            if (mags.empty()) {
                range = 1.0;
            } else {
                const std::size_t q =
                    std::min(mags.size() - 1,
                             static_cast<std::size_t>(0.999 * static_cast<double>(mags.size())));
                std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(q),
                                 mags.end());
                range = std::max(mags[q], 1e-6);
            }
        }
        ScaleBlock block;
        block.kappa = sp.kappa;
        block.knots.resize(cfg.knots);
        for (std::size_t i = 0; i < cfg.knots; ++i)
            block.knots[i] = range * (2.0 * static_cast<double>(i) /
                                          static_cast<double>(cfg.knots - 1) -
                                      1.0);
        block.raw_slopes.assign(cfg.knots + 1, 0.0);
        block.refresh();
        params.scales.push_back(std::move(block));
    }

    // Per-block step size: the quadratic part of the block objective has
    // curvature bounded by twice the mean squared input (sum of squared
    // overlaps telescopes to c^2), with slope values below 1.9; taking the
    // reciprocal keeps plain gradient descent stable at learning_rate = 1.
    std::vector<double> step(set.train.size(), 0.0);
    for (std::size_t b = 0; b < set.train.size(); ++b) {
        const ScalePairs& sp = set.train[b];
        double m2 = 0.0;
        for (double c : sp.inputs) m2 += c * c;
        if (!sp.inputs.empty()) m2 /= static_cast<double>(sp.inputs.size());
        step[b] = cfg.learning_rate / (8.0 * m2 + 1e-12);
    }

    const bool has_val = set.n_val_images > 0;
    const auto validation_loss = [&](const MonotoneFilterParams& p) {
        return has_val ? training_loss(set.val, set.n_val_images, p)
                       : training_loss(set.train, set.n_train_images, p);
    };

    TrainResult result;
    result.train_loss.push_back(training_loss(set.train, set.n_train_images, params));
    result.val_loss.push_back(validation_loss(params));
    result.params = params;
    result.best_epoch = 0;
    double best_val = result.val_loss.back();
    double lr_scale = 1.0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t b = 0; b < set.train.size(); ++b) {
            ScalePairs const& sp = set.train[b];
            if (sp.inputs.empty()) continue;
            ScaleBlock& block = params.scales[b];
            const std::vector<double> grad = training_gradient(sp, block);
            const double scale = step[b] * lr_scale /
                                 static_cast<double>(sp.inputs.size());
            const double lo = std::log(1.0001 * block.kappa * block.kappa);
            const double hi = std::log(1.9);
            if (lo >= hi)
                throw std::invalid_argument(
                    "train: kappa too large for the certified slope range");
            for (std::size_t j = 0; j < grad.size(); ++j) {
                const double updated = block.raw_slopes[j] - scale * grad[j];
                block.raw_slopes[j] = std::clamp(updated, lo, hi);
            }
            block.refresh();
        }
        const double tl = training_loss(set.train, set.n_train_images, params);
        const double vl = validation_loss(params);
        if (!std::isfinite(tl) || !std::isfinite(vl))
            throw training_error("train: loss diverged", static_cast<int>(epoch));
        result.train_loss.push_back(tl);
        result.val_loss.push_back(vl);
        if (vl < best_val) {
            best_val = vl;
            result.params = params;
            result.best_epoch = epoch;
        }
        lr_scale *= cfg.lr_decay;
    }
    return result;
}

}  // namespace dfdreg
