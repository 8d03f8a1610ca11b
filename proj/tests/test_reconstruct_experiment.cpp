// Filtered reconstruction and the experiment drivers.  Oracles: the
// identity filter must reproduce the plain filtered backprojection, linear
// shrinkage acts in closed form on each coefficient, and in the diagonal
// convergence mode the norm-family Bregman distance equals twice the summed
// squared reconstruction error.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/experiment.hpp"
#include "dfdreg/noise.hpp"
#include "dfdreg/phantom.hpp"
#include "dfdreg/reconstruct.hpp"

using namespace dfdreg;

namespace {

struct SmallScene {
    DfdContext ctx;
    Image truth;
    Sinogram noisy;

    SmallScene()
        : ctx(make_calibrated_geometry(32, 64, default_n_offsets(32)), 2),
          truth(make_phantom(PhantomKind::shepp_logan, 32)),
          noisy(1, 1) {
        NoiseSpec spec;
        spec.target_delta = 1.0;
        spec.seed = RngSeed{51};
        noisy = add_noise(radon_forward(truth, ctx.geometry), spec);
    }
};

}  // namespace

TEST_CASE("identity filter reproduces the filtered backprojection") {
    const SmallScene s;
    const Image direct = fbp(s.noisy, s.ctx.geometry);
    const Image rec = reconstruct(s.noisy, Filter::identity(), 1.0, s.ctx);
    CHECK(l2_distance(rec.pixels(), direct.pixels()) <=
          1e-12 * l2_norm(direct.pixels()));

    // Identity-initialized learned parameters act the same way.
    const Filter learned = filter_from_learned(
        identity_params(s.ctx.kappas.distinct_kappas(), 63, 1.0));
    const Image rec2 = reconstruct(s.noisy, learned, 1.0, s.ctx);
    CHECK(l2_distance(rec2.pixels(), direct.pixels()) <=
          1e-11 * l2_norm(direct.pixels()));
}

TEST_CASE("coefficient filtering applies the scale-aware closed form") {
    Rng rng{RngSeed{53}};
    Image img(16);
    for (double& p : img.pixels()) p = rng.gaussian();
    const QuasiSingularMap map(1.0, 2);
    WaveletField field = haar_analysis(img, 2);
    const WaveletField before = field;

    const double alpha = 0.5;
    filter_coefficients(field, Filter::linear_tikhonov(), alpha, map);
    // c -> phi(kappa, kappa c) / kappa = kappa^2 c / (kappa^2 + alpha).
    field.for_each_block([&](int level, int orientation, std::vector<double>& block) {
        const double k = map.kappa_for_block(level, orientation);
        const std::vector<double>& orig = orientation == 0
                                              ? before.approx()
                                              : before.detail(level, orientation);
        for (std::size_t i = 0; i < block.size(); ++i)
            CHECK(block[i] ==
                  Catch::Approx(k * k * orig[i] / (k * k + alpha)).margin(1e-12));
    });
}

TEST_CASE("cubic reconstruction approaches the backprojection as alpha shrinks") {
    const SmallScene s;
    const Image direct = fbp(s.noisy, s.ctx.geometry);
    double prev = -1.0;
    // The shrinkage offset on large coefficients decays like 2 alpha / 3, so
    // the distance only becomes small once alpha is well below 1e-2.
    for (double alpha : {1.0, 0.1, 0.01, 1e-3, 1e-4}) {
        const Image rec = reconstruct(s.noisy, Filter::example_cubic(), alpha, s.ctx);
        const double d = l2_distance(rec.pixels(), direct.pixels());
        if (prev >= 0.0) CHECK(d < prev);
        prev = d;
    }
    CHECK(prev <= 0.05 * l2_norm(direct.pixels()));
}

TEST_CASE("noise-sweep table with identity parameters collapses its columns") {
    const DfdContext ctx(make_calibrated_geometry(32, 48, default_n_offsets(32)), 2);
    Rng rng{RngSeed{55}};
    std::vector<Image> phantoms;
    for (int i = 0; i < 3; ++i) phantoms.push_back(random_phantom(32, rng));

    TrainedBank bank;
    bank.add(NoiseKind::gaussian, 2.0,
             identity_params(ctx.kappas.distinct_kappas(), 33, 1.0));

    const std::vector<NoiseKind> kinds{NoiseKind::gaussian};
    const std::vector<double> deltas{0.0, 2.0};
    const MseTable table =
        run_mse_table(phantoms, kinds, deltas, bank, ctx, RngSeed{56});
    REQUIRE(table.cells.size() == 2);

    // delta = 0: no perturbation, identical reconstructions in both columns.
    CHECK(table.cells[0].measured_delta == 0.0);
    CHECK(table.cells[0].mse_fbp == Catch::Approx(table.cells[0].mse_learned).epsilon(1e-12));
    // delta = 2 with identity parameters: equal columns, calibrated level.
    CHECK(table.cells[1].measured_delta == Catch::Approx(2.0).epsilon(1e-10));
    CHECK(table.cells[1].mse_fbp ==
          Catch::Approx(table.cells[1].mse_learned).epsilon(1e-9));
    CHECK(table.cells[1].mse_fbp > table.cells[0].mse_fbp);

    const std::string csv = mse_table_to_csv(table);
    CHECK(csv.rfind("noise_kind,delta,measured_delta,mse_fbp,mse_learned\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    // Same seed: byte-identical repeat.  New seed: different noise.
    const MseTable again =
        run_mse_table(phantoms, kinds, deltas, bank, ctx, RngSeed{56});
    CHECK(mse_table_to_csv(again) == csv);
    const MseTable other =
        run_mse_table(phantoms, kinds, deltas, bank, ctx, RngSeed{57});
    CHECK(mse_table_to_csv(other) != csv);
}

TEST_CASE("noise-sweep table input validation") {
    const DfdContext ctx(make_calibrated_geometry(16, 16, default_n_offsets(16)), 2);
    const TrainedBank empty_bank;
    const std::vector<NoiseKind> kinds{NoiseKind::gaussian};
    CHECK_THROWS_AS(
        run_mse_table({}, kinds, {1.0}, empty_bank, ctx, RngSeed{0}),
        std::invalid_argument);
    const std::vector<Image> phantoms{Image(16)};
    CHECK_THROWS_AS(
        run_mse_table(phantoms, kinds, {-1.0}, empty_bank, ctx, RngSeed{0}),
        std::invalid_argument);
    CHECK_THROWS_WITH(
        run_mse_table(phantoms, kinds, {3.0}, empty_bank, ctx, RngSeed{0}),
        Catch::Matchers::ContainsSubstring("no trained parameters"));
    CHECK_THROWS_AS(
        run_mse_table({Image(32)}, kinds, {1.0}, empty_bank, ctx, RngSeed{0}),
        std::invalid_argument);
}

TEST_CASE("diagonal convergence study satisfies its internal identities") {
    ConvergenceConfig cfg;
    cfg.deltas = {1.0, 0.5, 0.25, 0.125};
    cfg.trials = 4;
    cfg.seed = RngSeed{61};
    DiagonalModel model;
    model.n_components = 256;

    const ExperimentRecord record = run_convergence_study(cfg, model);
    REQUIRE(record.rows.size() == 4);
    REQUIRE(record.bregman_trials.size() == 4);

    const double n = static_cast<double>(model.n_components);
    for (std::size_t k = 0; k < record.rows.size(); ++k) {
        const ConvergenceRow& r = record.rows[k];
        CHECK(r.target_delta == cfg.deltas[k]);
        // The perturbation is rescaled to the exact l2 size.
        CHECK(r.measured_delta == Catch::Approx(r.target_delta).epsilon(1e-12));
        CHECK(r.alpha == Catch::Approx(cfg.c * r.target_delta).epsilon(1e-14));
        // For the norm family with L = 1 and max kappa = 1 the Bregman
        // distance is exactly twice the summed squared error.
        CHECK(r.bregman == Catch::Approx(2.0 * n * r.mse_filtered).epsilon(1e-10));
        CHECK(r.bound > 0.0);
        CHECK(std::isfinite(r.mse_fbp));
        double mean = 0.0;
        for (double b : record.bregman_trials[k]) mean += b;
        CHECK(r.bregman == Catch::Approx(mean / 4.0).epsilon(1e-12));
    }
    // Errors shrink with the noise (allow no inversions on this short grid).
    CHECK(record.rows.front().bregman > record.rows.back().bregman);
    CHECK(record.slope_lo <= record.slope);
    CHECK(record.slope <= record.slope_hi);

    const std::string csv = convergence_to_csv(record);
    CHECK(csv.rfind("target_delta,measured_delta,alpha,mse_fbp,mse_filtered,"
                    "bregman_distance,bound\n",
                    0) == 0);
    CHECK(convergence_to_csv(run_convergence_study(cfg, model)) == csv);

    ConvergenceConfig quad = cfg;
    quad.alpha_rule = AlphaRule::quadratic;
    quad.c = 2.0;
    const ExperimentRecord qrec = run_convergence_study(quad, model);
    for (const ConvergenceRow& r : qrec.rows)
        CHECK(r.alpha ==
              Catch::Approx(2.0 * r.target_delta * r.target_delta).epsilon(1e-14));
}

TEST_CASE("convergence configuration validation") {
    ConvergenceConfig cfg;
    cfg.deltas = {1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.deltas = {1.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.deltas = {0.5, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.deltas = {1.0, -0.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.deltas = {1.0, 0.5};
    cfg.c = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.c = 1.0;
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.trials = 1;
    cfg.validate();

    DiagonalModel tiny;
    tiny.n_components = 1;
    CHECK_THROWS_AS(run_convergence_study(cfg, tiny), std::invalid_argument);
}

TEST_CASE("tomographic convergence study with the identity filter") {
    const DfdContext ctx(make_calibrated_geometry(32, 48, default_n_offsets(32)), 2);
    const Image truth = make_phantom(PhantomKind::disks, 32);

    ConvergenceConfig cfg;
    cfg.deltas = {2.0, 1.0};
    cfg.trials = 2;
    cfg.filter = Filter::identity();
    cfg.seed = RngSeed{63};

    const ExperimentRecord record = run_convergence_study(cfg, ctx, truth);
    REQUIRE(record.rows.size() == 2);
    for (const ConvergenceRow& r : record.rows) {
        // Sinogram convention: per-entry RMS perturbation.
        CHECK(r.measured_delta == Catch::Approx(r.target_delta).epsilon(1e-12));
        // The identity filter leaves the backprojection untouched.
        CHECK(r.mse_filtered == Catch::Approx(r.mse_fbp).epsilon(1e-10));
        CHECK(std::isfinite(r.bregman));
        CHECK(r.bregman > 0.0);
    }
    CHECK(record.rows[0].mse_fbp > record.rows[1].mse_fbp);

    CHECK_THROWS_AS(run_convergence_study(cfg, ctx, Image(16)), std::invalid_argument);
    CHECK(convergence_to_csv(run_convergence_study(cfg, ctx, truth)) ==
          convergence_to_csv(record));
}
