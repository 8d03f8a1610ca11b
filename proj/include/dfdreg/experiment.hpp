#pragma once

// Experiment drivers: the noise-sweep MSE table comparing plain filtered
// backprojection against learned-filter reconstruction, and the
// convergence-rate study recording Bregman distances against the noise
// level.  Two delta conventions are in play and deliberately so:
//
//   * sinogram experiments (MSE table, CT-mode convergence) use the
//     per-entry root-mean-square perturbation delta = (1/sqrt(n)) ||y - y'||,
//     the convention under which the reported noise grid 4..28 is stated;
//   * the diagonal convergence mode uses the plain l2 norm ||z - z'|| = delta,
//     the quantity the rate bound delta^2/(2 alpha) + C delta + C^2 alpha
//     is phrased in, so fitted slopes are directly comparable to it.
//
// Every cell of an experiment grid derives its RNG substream from the root
// seed and the cell indices, so serial and parallel execution (and any
// re-run with the same seed) produce bit-identical tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/dfd.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/haar.hpp"
#include "dfdreg/learned.hpp"
#include "dfdreg/neighbour.hpp"
#include "dfdreg/noise.hpp"
#include "dfdreg/radon.hpp"
#include "dfdreg/reconstruct.hpp"

namespace dfdreg {

namespace detail {

inline void append_csv_value(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MSE table
// ---------------------------------------------------------------------------

// Trained parameter sets addressed by (noise kind, delta).
struct TrainedBank {
    struct Entry {
        NoiseKind kind = NoiseKind::gaussian;
        double delta = 0.0;
        MonotoneFilterParams params;
    };
    std::vector<Entry> entries;

    void add(NoiseKind kind, double delta, MonotoneFilterParams params) {
        entries.push_back({kind, delta, std::move(params)});
    }

    const MonotoneFilterParams& find(NoiseKind kind, double delta) const {
        for (const Entry& e : entries)
            if (e.kind == kind && std::abs(e.delta - delta) <= 1e-9 * std::max(1.0, delta))
                return e.params;
        throw std::invalid_argument(std::string("no trained parameters for ") +
                                    to_string(kind) + " at delta " +
                                    std::to_string(delta));
    }
};

struct MseCell {
    NoiseKind kind = NoiseKind::gaussian;
    double delta = 0.0;
    double measured_delta = 0.0;  // mean over phantoms
    double mse_fbp = 0.0;         // mean per-pixel squared error
    double mse_learned = 0.0;
};

struct MseTable {
    std::vector<MseCell> cells;  // kind-major, deltas in the given order
};

// Mean reconstruction errors over the phantom set, per (kind, delta).
// delta = 0 rows compare against noiseless data and need no trained
// parameters: both columns then equal the inversion error of the plain
// filtered backprojection.
inline MseTable run_mse_table(const std::vector<Image>& phantoms,
                              const std::vector<NoiseKind>& kinds,
                              const std::vector<double>& deltas,
                              const TrainedBank& bank, const DfdContext& ctx,
                              RngSeed seed) {
    if (phantoms.empty())
        throw std::invalid_argument("run_mse_table: no phantoms");
    for (double d : deltas)
        if (d < 0.0) throw std::invalid_argument("run_mse_table: negative delta");

    // Clean projections are shared by every cell.
    std::vector<Sinogram> clean;
    clean.reserve(phantoms.size());
    for (const Image& x : phantoms) {
        if (x.size() != ctx.geometry.image_size)
            throw std::invalid_argument("run_mse_table: phantom size mismatch");
        clean.push_back(radon_forward(x, ctx.geometry));
    }

    const Rng base{seed};
    MseTable table;
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        for (std::size_t di = 0; di < deltas.size(); ++di) {
            const NoiseKind kind = kinds[ki];
            const double delta = deltas[di];
            const MonotoneFilterParams* params =
                delta > 0.0 ? &bank.find(kind, delta) : nullptr;
            const Filter learned =
                params ? filter_from_learned(*params) : Filter::identity();
            const double alpha = delta > 0.0 ? delta : 1.0;

            MseCell cell;
            cell.kind = kind;
            cell.delta = delta;
            for (std::size_t p = 0; p < phantoms.size(); ++p) {
                Sinogram y = clean[p];
                if (delta > 0.0) {
                    NoiseSpec spec;
                    spec.kind = kind;
                    spec.target_delta = delta;
                    spec.seed = RngSeed{base.fork(20 + ki, di, p).root_seed()};
                    y = add_noise(clean[p], spec);
                }
                cell.measured_delta += noise_level(clean[p], y);
                const Image back = fbp(y, ctx.geometry);
                cell.mse_fbp += mse(back, phantoms[p]);
                WaveletField field = haar_analysis(back, ctx.levels);
                filter_coefficients(field, learned, alpha, ctx.kappas);
                cell.mse_learned += mse(haar_synthesis(field), phantoms[p]);
            }
            const double n = static_cast<double>(phantoms.size());
            cell.measured_delta /= n;
            cell.mse_fbp /= n;
            cell.mse_learned /= n;
            table.cells.push_back(cell);
        }
    }
    return table;
}

inline std::string mse_table_to_csv(const MseTable& table) {
    std::string out = "noise_kind,delta,measured_delta,mse_fbp,mse_learned\n";
    for (const MseCell& c : table.cells) {
        out += to_string(c.kind);
        out += ',';
        detail::append_csv_value(out, c.delta);
        out += ',';
        detail::append_csv_value(out, c.measured_delta);
        out += ',';
        detail::append_csv_value(out, c.mse_fbp);
        out += ',';
        detail::append_csv_value(out, c.mse_learned);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

enum class AlphaRule { proportional, quadratic };

inline const char* to_string(AlphaRule r) {
    return r == AlphaRule::proportional ? "proportional" : "quadratic";
}

inline AlphaRule alpha_rule_from_string(const std::string& s) {
    if (s == "proportional") return AlphaRule::proportional;
    if (s == "quadratic") return AlphaRule::quadratic;
    throw std::invalid_argument("unknown alpha rule: " + s);
}

struct ConvergenceConfig {
    std::vector<double> deltas;  // strictly decreasing
    AlphaRule alpha_rule = AlphaRule::proportional;
    double c = 1.0;  // alpha = c * delta or c * delta^2
    Filter filter = Filter::example_cubic();
    NeighbourSpec neighbour{};  // norm_q with L = 1 by default
    std::size_t trials = 16;
    RngSeed seed{0};

    void validate() const {
        if (deltas.size() < 2)
            throw std::invalid_argument("ConvergenceConfig: need at least two deltas");
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            if (!(deltas[i] > 0.0))
                throw std::invalid_argument("ConvergenceConfig: deltas must be positive");
            if (i > 0 && !(deltas[i] < deltas[i - 1]))
                throw std::invalid_argument(
                    "ConvergenceConfig: deltas must be strictly decreasing");
        }
        if (!(c > 0.0)) throw std::invalid_argument("ConvergenceConfig: c must be positive");
        if (trials < 1)
            throw std::invalid_argument("ConvergenceConfig: need at least one trial");
    }

    double alpha_for(double delta) const {
        return alpha_rule == AlphaRule::proportional ? c * delta : c * delta * delta;
    }
};

// Diagonal surrogate problem: data z_lambda = kappa_lambda x_lambda with
// explicit power-law scales and truth, bypassing the tomography pipeline so
// that discretization error cannot mask the asymptotic rate.
struct DiagonalModel {
    std::size_t n_components = 2048;
    double kappa_exponent = 0.5;  // kappa_lambda = lambda^-kappa_exponent
    double truth_exponent = 1.5;  // x_lambda    = lambda^-truth_exponent
};

struct ConvergenceRow {
    double target_delta = 0.0;
    double measured_delta = 0.0;
    double alpha = 0.0;
    double mse_fbp = 0.0;       // unfiltered inversion, mean squared per entry
    double mse_filtered = 0.0;  // filtered reconstruction, mean squared per entry
    double bregman = 0.0;       // mean D_Q against the truth
    double bound = 0.0;         // delta^2/(2 alpha) + C delta + C^2 alpha
};

struct ExperimentRecord {
    std::vector<ConvergenceRow> rows;  // descending delta
    std::vector<std::vector<double>> bregman_trials;  // [delta][trial]
    double slope = 0.0;     // log-log fit of mean D_Q vs measured delta
    double slope_lo = 0.0;  // 95% bootstrap interval over trials
    double slope_hi = 0.0;
};

namespace detail {

inline double fit_loglog_slope(const std::vector<double>& x,
                               const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(std::max(x[i], 1e-300));
        const double ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double d = static_cast<double>(n) * sxx - sx * sx;
    if (std::abs(d) < 1e-30) return 0.0;
    return (static_cast<double>(n) * sxy - sx * sy) / d;
}

inline void finish_record(ExperimentRecord& record, std::size_t trials, RngSeed seed) {
    std::vector<double> xs, ys;
    for (const ConvergenceRow& r : record.rows) {
        xs.push_back(r.measured_delta);
        ys.push_back(r.bregman);
    }
    record.slope = fit_loglog_slope(xs, ys);

    // Bootstrap over trials: resample trial indices, recompute row means,
    // refit.  200 draws, percentile interval.
    const std::size_t draws = 200;
    std::vector<double> slopes;
    slopes.reserve(draws);
    Rng rng = Rng(seed).fork(99);
    for (std::size_t b = 0; b < draws; ++b) {
        std::vector<double> ymean(record.rows.size(), 0.0);
        std::vector<std::size_t> pick(trials);
        for (std::size_t t = 0; t < trials; ++t) pick[t] = rng.next_u64() % trials;
        for (std::size_t k = 0; k < record.rows.size(); ++k) {
            double acc = 0.0;
            for (std::size_t t : pick) acc += record.bregman_trials[k][t];
            ymean[k] = acc / static_cast<double>(trials);
        }
        slopes.push_back(fit_loglog_slope(xs, ymean));
    }
    std::sort(slopes.begin(), slopes.end());
    record.slope_lo = slopes[static_cast<std::size_t>(0.025 * (draws - 1))];
    record.slope_hi = slopes[static_cast<std::size_t>(0.975 * (draws - 1))];
}

}  // namespace detail

// Diagonal-mode study.  delta here is the plain l2 size of the perturbation
// (||z - z_noisy|| = delta exactly, by rescaling one gaussian draw).
inline ExperimentRecord run_convergence_study(const ConvergenceConfig& cfg,
                                              const DiagonalModel& model) {
    cfg.validate();
    if (model.n_components < 2)
        throw std::invalid_argument("DiagonalModel: need at least two components");
    const std::size_t n = model.n_components;

    std::vector<double> kappas(n), truth(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lambda = static_cast<double>(i + 1);
        kappas[i] = std::pow(lambda, -model.kappa_exponent);
        truth[i] = std::pow(lambda, -model.truth_exponent);
        z[i] = kappas[i] * truth[i];
    }
    const double max_kappa = *std::max_element(kappas.begin(), kappas.end());

    // Source element eta with nabla Q(truth) = M_kappa eta; the bound
    // constant uses C = 2 ||eta|| (exact and nearby solutions coincide in
    // this synthetic model).
    double eta_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = cfg.neighbour.q_prime(z[i], kappas[i], max_kappa);
        eta_sq += eta * eta;
    }
    const double C = 2.0 * std::sqrt(eta_sq);

    const Rng base{cfg.seed};
    ExperimentRecord record;
    std::vector<double> noisy(n), rec(n);
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        const double delta = cfg.deltas[k];
        const double alpha = cfg.alpha_for(delta);
        ConvergenceRow row;
        row.target_delta = delta;
        row.alpha = alpha;
        row.bound = delta * delta / (2.0 * alpha) + C * delta + C * C * alpha;
        std::vector<double> trial_bregman(cfg.trials, 0.0);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            Rng rng = base.fork(31, k, t);
            double norm_sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                noisy[i] = rng.gaussian();
                norm_sq += noisy[i] * noisy[i];
            }
            const double scale = delta / std::sqrt(norm_sq);
            double err_id = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = scale * noisy[i];
                noisy[i] = z[i] + e;
                const double id_err = e / kappas[i];
                err_id += id_err * id_err;
            }
            row.measured_delta += l2_distance(z, noisy);
            double err_f = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                rec[i] = cfg.filter.eval(alpha, kappas[i], noisy[i]) / kappas[i];
                const double d = rec[i] - truth[i];
                err_f += d * d;
            }
            trial_bregman[t] = bregman_distance(cfg.neighbour, kappas, rec, truth);
            row.mse_fbp += err_id / static_cast<double>(n);
            row.mse_filtered += err_f / static_cast<double>(n);
            row.bregman += trial_bregman[t];
        }
        const double m = static_cast<double>(cfg.trials);
        row.measured_delta /= m;
        row.mse_fbp /= m;
        row.mse_filtered /= m;
        row.bregman /= m;
        record.rows.push_back(row);
        record.bregman_trials.push_back(std::move(trial_bregman));
    }
    detail::finish_record(record, cfg.trials, cfg.seed);
    return record;
}

// CT-mode study on a known truth image.  delta keeps the sinogram
// convention (per-entry RMS); the perturbation is gaussian, rescaled to the
// target exactly.
inline ExperimentRecord run_convergence_study(const ConvergenceConfig& cfg,
                                              const DfdContext& ctx,
                                              const Image& truth) {
    cfg.validate();
    if (truth.size() != ctx.geometry.image_size)
        throw std::invalid_argument("run_convergence_study: truth size mismatch");
    const Sinogram z = radon_forward(truth, ctx.geometry);
    const WaveletField truth_field = haar_analysis(truth, ctx.levels);
    const std::size_t n = z.values().size();

    double eta_sq = 0.0;
    const double max_kappa = ctx.kappas.max_kappa();
    truth_field.for_each_block([&](int level, int orientation,
                                   const std::vector<double>& block) {
        const double kappa = ctx.kappas.kappa_for_block(level, orientation);
        for (double v : block) {
            const double eta = cfg.neighbour.q_prime(kappa * v, kappa, max_kappa);
            eta_sq += eta * eta;
        }
    });
    const double C = 2.0 * std::sqrt(eta_sq);

    const Rng base{cfg.seed};
    ExperimentRecord record;
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        const double delta = cfg.deltas[k];
        const double alpha = cfg.alpha_for(delta);
        ConvergenceRow row;
        row.target_delta = delta;
        row.alpha = alpha;
        row.bound = delta * delta / (2.0 * alpha) + C * delta + C * C * alpha;
        std::vector<double> trial_bregman(cfg.trials, 0.0);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            Rng rng = base.fork(32, k, t);
            Sinogram noisy = z;
            std::vector<double> e(n);
            double norm_sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                e[i] = rng.gaussian();
                norm_sq += e[i] * e[i];
            }
            // RMS convention: (1/sqrt n)||e|| = delta.
            const double scale = delta * std::sqrt(static_cast<double>(n) / norm_sq);
            for (std::size_t i = 0; i < n; ++i) noisy.values()[i] += scale * e[i];
            row.measured_delta += noise_level(z, noisy);

            const Image back = fbp(noisy, ctx.geometry);
            row.mse_fbp += mse(back, truth);
            WaveletField field = haar_analysis(back, ctx.levels);
            filter_coefficients(field, cfg.filter, alpha, ctx.kappas);
            trial_bregman[t] =
                bregman_distance(cfg.neighbour, ctx.kappas, field, truth_field);
            row.mse_filtered += mse(haar_synthesis(field), truth);
            row.bregman += trial_bregman[t];
        }
        const double m = static_cast<double>(cfg.trials);
        row.measured_delta /= m;
        row.mse_fbp /= m;
        row.mse_filtered /= m;
        row.bregman /= m;
        record.rows.push_back(row);
        record.bregman_trials.push_back(std::move(trial_bregman));
    }
    detail::finish_record(record, cfg.trials, cfg.seed);
    return record;
}

inline std::string convergence_to_csv(const ExperimentRecord& record) {
    std::string out =
        "target_delta,measured_delta,alpha,mse_fbp,mse_filtered,bregman_distance,bound\n";
    for (const ConvergenceRow& r : record.rows) {
        detail::append_csv_value(out, r.target_delta);
        out += ',';
        detail::append_csv_value(out, r.measured_delta);
        out += ',';
        detail::append_csv_value(out, r.alpha);
        out += ',';
        detail::append_csv_value(out, r.mse_fbp);
        out += ',';
        detail::append_csv_value(out, r.mse_filtered);
        out += ',';
        detail::append_csv_value(out, r.bregman);
        out += ',';
        detail::append_csv_value(out, r.bound);
        out += '\n';
    }
    return out;
}

}  // namespace dfdreg
