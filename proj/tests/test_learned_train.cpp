// Learned monotone coefficient maps and their trainer.  Oracles: hand
// integration of a small piecewise-linear slope profile, the telescoping
// identity sum_j slope_j * overlap_j(x) = psi(x), least-squares regressions
// with known optimal slopes (x/2 and clamped 5x), and finite differences for
// the analytic training gradient.

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/learned.hpp"
#include "dfdreg/phantom.hpp"
#include "dfdreg/train.hpp"

using namespace dfdreg;

namespace {

ScaleBlock sample_block() {
    ScaleBlock b;
    b.kappa = 1.0;
    b.knots = {-1.0, -0.25, 0.5, 1.0};
    b.raw_slopes = {std::log(2.0), 0.0, std::log(0.5), std::log(3.0), std::log(1.5)};
    b.refresh();
    return b;
}

TrainingSet synthetic_set(double kappa, double factor, std::size_t n, RngSeed seed) {
    TrainingSet set;
    ScalePairs sp;
    sp.kappa = kappa;
    Rng rng{seed};
    for (std::size_t i = 0; i < n; ++i) {
        const double c = rng.uniform(-1.0, 1.0);
        sp.inputs.push_back(c);
        sp.targets.push_back(factor * c);
    }
    set.train.push_back(std::move(sp));
    set.n_train_images = 1;
    return set;
}

std::string temp_json_path() {
    return (std::filesystem::temp_directory_path() /
            ("dfdreg_params_" + std::to_string(::getpid()) + ".json"))
        .string();
}

}  // namespace

TEST_CASE("piecewise-linear block integrates its slope profile") {
    const ScaleBlock b = sample_block();
    CHECK(b.eval(0.0) == 0.0);
    // Hand integration of the slopes 2, 1, 0.5, 3, 1.5 across the knots.
    CHECK(b.eval(0.5) == Catch::Approx(0.25).margin(1e-14));
    CHECK(b.eval(0.75) == Catch::Approx(1.0).margin(1e-14));
    CHECK(b.eval(-0.25) == Catch::Approx(-0.125).margin(1e-14));
    CHECK(b.eval(-1.0) == Catch::Approx(-0.875).margin(1e-14));
    CHECK(b.eval(-2.0) == Catch::Approx(-2.875).margin(1e-14));  // left extension
    CHECK(b.eval(2.0) == Catch::Approx(3.25).margin(1e-14));     // right extension

    // Interior difference quotients recover the per-piece slopes.
    CHECK((b.eval(0.4) - b.eval(0.1)) / 0.3 == Catch::Approx(0.5).margin(1e-12));
    CHECK((b.eval(-0.5) - b.eval(-0.9)) / 0.4 == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("signed piece overlaps telescope to the map value") {
    const ScaleBlock b = sample_block();
    for (double x : {-2.0, -0.6, -0.1, 0.3, 0.9, 1.7}) {
        double acc = 0.0;
        b.for_each_piece_overlap(x, [&](std::size_t j, double overlap) {
            acc += std::exp(b.raw_slopes[j]) * overlap;
        });
        CHECK(acc == Catch::Approx(b.eval(x)).margin(1e-12));
    }
}

TEST_CASE("identity initialization evaluates to the identity") {
    const MonotoneFilterParams p = identity_params({0.5, 1.0}, 21, 2.0);
    for (double x : {-3.0, -1.7, -0.3, 0.0, 0.4, 1.9, 2.6})
        for (double k : {0.5, 1.0})
            CHECK(eval_learned(p, k, x) == Catch::Approx(x).margin(1e-12));
    CHECK_THROWS_AS(identity_params({1.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(identity_params({1.0}, 5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_learned(p, 0.75, 1.0), std::invalid_argument);

    // Wrapped as a filter the map acts on x / kappa and scales back by kappa,
    // so a doubled slope profile doubles the filter output.
    MonotoneFilterParams twice = identity_params({0.5}, 9, 1.0);
    for (double& r : twice.scales[0].raw_slopes) r = std::log(2.0);
    twice.refresh();
    const Filter f = filter_from_learned(twice);
    CHECK(f.eval(1.0, 0.5, 0.3) == Catch::Approx(0.6).margin(1e-12));
    CHECK(filter_from_learned(identity_params({1.0})).eval(2.0, 1.0, 0.37) ==
          Catch::Approx(0.37).margin(1e-12));
}

TEST_CASE("parameter JSON round trips bit-exactly") {
    MonotoneFilterParams p = identity_params({0.5, 1.0}, 9, 1.5);
    p.scales[0].raw_slopes[3] = 0.1234567890123456;
    p.refresh();
    p.delta = 8.0;
    p.noise_kind = "poisson";
    p.seed = 424242;

    const MonotoneFilterParams q = params_from_json(params_to_json(p));
    CHECK(q.delta == p.delta);
    CHECK(q.noise_kind == p.noise_kind);
    CHECK(q.seed == p.seed);
    REQUIRE(q.scales.size() == 2);
    CHECK(q.scales[0].raw_slopes == p.scales[0].raw_slopes);
    CHECK(q.scales[0].knots == p.scales[0].knots);
    CHECK(q.scales[1].kappa == 1.0);

    const std::string path = temp_json_path();
    save_params(p, path);
    const MonotoneFilterParams r = load_params(path);
    CHECK(r.scales[0].raw_slopes == p.scales[0].raw_slopes);
    std::remove(path.c_str());
}

TEST_CASE("parameter validation rejects malformed blocks") {
    CHECK_THROWS_AS(params_from_json(nlohmann::json{{"delta", 1.0}}), format_error);

    MonotoneFilterParams p = identity_params({1.0}, 5, 1.0);
    nlohmann::json j = params_to_json(p);
    j["scales"][0]["knots"] = std::vector<double>{0.5, 1.0};  // does not straddle 0
    CHECK_THROWS_AS(params_from_json(j), format_error);

    j = params_to_json(p);
    j["scales"][0]["raw_slopes"] = std::vector<double>{0.0, 0.0};  // wrong count
    CHECK_THROWS_AS(params_from_json(j), format_error);

    j = params_to_json(p);
    j["scales"][0]["kappa"] = -1.0;
    CHECK_THROWS_AS(params_from_json(j), format_error);

    CHECK_THROWS_AS(identity_params({1.0, 1.0}), format_error);
}

TEST_CASE("training configuration validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.lr_decay = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.knots = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.delta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("perfect data leaves the identity untouched") {
    TrainingSet set = synthetic_set(0.5, 1.0, 200, RngSeed{3});
    TrainConfig cfg;
    cfg.delta = 0.0;
    cfg.epochs = 5;
    cfg.knots = 9;
    cfg.range = 1.0;
    const TrainResult result = train(set, cfg);
    CHECK(result.best_epoch == 0);
    for (double l : result.train_loss) CHECK(l == Catch::Approx(0.0).margin(1e-20));
    for (double r : result.params.scales[0].raw_slopes)
        CHECK(r == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("training recovers a halved response") {
    TrainingSet set = synthetic_set(0.5, 0.5, 600, RngSeed{5});
    TrainConfig cfg;
    cfg.delta = 0.0;
    cfg.epochs = 4000;  // the telescoped parametrization descends slowly
    cfg.learning_rate = 4.0;
    cfg.knots = 9;
    cfg.range = 1.0;
    const TrainResult result = train(set, cfg);

    CHECK(result.train_loss.front() > result.train_loss.back());
    CHECK(result.train_loss.back() < 1e-4 * result.train_loss.front());
    CHECK(result.val_loss == result.train_loss);  // no validation split
    const ScaleBlock& block = result.params.scales[0];
    for (double x : {-0.9, -0.4, 0.2, 0.7})
        CHECK(block.eval(x) == Catch::Approx(0.5 * x).margin(5e-3));
}

TEST_CASE("slope box clamps steep and shallow regressions") {
    // Optimal slope 5 exceeds the upper bound 1.9.
    TrainingSet steep = synthetic_set(0.5, 5.0, 400, RngSeed{7});
    TrainConfig cfg;
    cfg.delta = 0.0;
    cfg.epochs = 120;
    cfg.knots = 9;
    cfg.range = 1.0;
    const TrainResult up = train(steep, cfg);
    const double hi = std::log(1.9);
    bool any_at_cap = false;
    for (double r : up.params.scales[0].raw_slopes) {
        CHECK(r <= hi + 1e-12);
        any_at_cap = any_at_cap || std::abs(r - hi) < 1e-9;
    }
    CHECK(any_at_cap);

    // Optimal slope 0.1 sits below the lower bound 1.0001 * kappa^2 = 0.81.
    TrainingSet shallow = synthetic_set(0.9, 0.1, 400, RngSeed{9});
    const TrainResult down = train(shallow, cfg);
    const double lo = std::log(1.0001 * 0.81);
    for (double r : down.params.scales[0].raw_slopes) CHECK(r >= lo - 1e-12);

    // The box therefore certifies kappa^2 |x| < |phi| < 2 |x| for the
    // wrapped filter at any x != 0.
    const Filter f = filter_from_learned(down.params);
    for (double x : {-0.8, 0.05, 0.6}) {
        const double phi = f.eval(1.0, 0.9, x);
        CHECK(std::abs(phi) > 0.81 * std::abs(x));
        CHECK(std::abs(phi) < 2.0 * std::abs(x));
    }

    // kappa = 1.5 needs slope >= 1.0001 * 2.25 > 1.9: the box is empty.
    TrainingSet bad = synthetic_set(1.5, 1.0, 50, RngSeed{11});
    CHECK_THROWS_AS(train(bad, cfg), std::invalid_argument);
}

TEST_CASE("analytic training gradient matches finite differences") {
    ScaleBlock block;
    block.kappa = 0.8;
    block.knots = {-1.0, -0.5, 0.0, 0.5, 1.0};
    block.raw_slopes = {-0.2, 0.1, -0.1, 0.15, -0.05, 0.2};
    block.refresh();

    ScalePairs pairs;
    pairs.kappa = 0.8;
    Rng rng{RngSeed{13}};
    for (int i = 0; i < 30; ++i) {
        pairs.inputs.push_back(rng.uniform(-1.5, 1.5));
        pairs.targets.push_back(rng.uniform(-1.5, 1.5));
    }

    const std::vector<double> grad = training_gradient(pairs, block);
    const auto loss = [&](const ScaleBlock& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
            const double r = b.eval(pairs.inputs[i]) - pairs.targets[i];
            acc += r * r;
        }
        return acc;
    };
    const double h = 1e-6;
    for (std::size_t j = 0; j < grad.size(); ++j) {
        ScaleBlock plus = block, minus = block;
        plus.raw_slopes[j] += h;
        minus.raw_slopes[j] -= h;
        plus.refresh();
        minus.refresh();
        const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
        CHECK(grad[j] == Catch::Approx(fd).margin(1e-5 * std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("tomographic training pipeline produces a usable filter") {
    const std::size_t n = 32;
    const DfdContext ctx(make_calibrated_geometry(n, 64, default_n_offsets(n)), 2);
    Rng rng{RngSeed{17}};
    std::vector<Image> images;
    for (int i = 0; i < 10; ++i) images.push_back(random_phantom(n, rng));

    TrainConfig cfg;
    cfg.delta = 2.0;
    cfg.n_train = 8;
    cfg.n_val = 2;
    cfg.epochs = 10;
    cfg.knots = 17;
    cfg.seed = RngSeed{18};

    const TrainingSet set = build_training_pairs(images, cfg, ctx);
    REQUIRE(set.train.size() == 2);  // one block per distinct kappa
    REQUIRE(set.val.size() == 2);
    // Per image: 3 * 256 finest-level details; 3 * 64 + 64 coarse entries.
    CHECK(set.train[0].inputs.size() == 8 * 3 * 256);
    CHECK(set.train[1].inputs.size() == 8 * (3 * 64 + 64));
    CHECK(set.val[0].inputs.size() == 2 * 3 * 256);
    CHECK(set.train[0].inputs.size() == set.train[0].targets.size());

    const TrainResult result = train(set, cfg);
    for (double l : result.val_loss) CHECK(std::isfinite(l));
    CHECK(result.params.scales.size() == 2);
    const Filter f = filter_from_learned(result.params);
    const double k = ctx.kappas.kappa(1);
    CHECK(std::isfinite(f.eval(cfg.delta, k, 0.5)));
    CHECK(f.eval(cfg.delta, k, 0.0) == 0.0);

    // Same configuration, same images: byte-identical parameters.
    const TrainResult again = train(build_training_pairs(images, cfg, ctx), cfg);
    CHECK(params_to_json(again.params) == params_to_json(result.params));

    CHECK_THROWS_AS(build_training_pairs({Image(n)}, cfg, ctx), std::invalid_argument);
    std::vector<Image> wrong(10, Image(16));
    CHECK_THROWS_AS(build_training_pairs(wrong, cfg, ctx), std::invalid_argument);
}
