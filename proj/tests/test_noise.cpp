// Calibrated perturbations.  The additive kinds must hit the requested
// per-entry RMS level exactly (they rescale one fixed draw); the intensity
// kinds must land within the 1% calibration contract; every kind must be
// reproducible from its seed.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/noise.hpp"

using namespace dfdreg;

namespace {

Sinogram ramp_sinogram(std::size_t n_angles, std::size_t n_offsets) {
    Sinogram y(n_angles, n_offsets);
    std::size_t i = 0;
    for (double& v : y.values())
        v = 20.0 + 10.0 * std::sin(static_cast<double>(i++));
    return y;
}

}  // namespace

TEST_CASE("noise level is the per-entry RMS difference") {
    Sinogram clean(1, 5);
    Sinogram noisy(1, 5);
    noisy.values() = {3.0, 4.0, 0.0, 0.0, 0.0};
    CHECK(noise_level(clean, noisy) == Catch::Approx(std::sqrt(5.0)).epsilon(1e-14));
    CHECK(noise_level(clean, clean) == 0.0);
    CHECK_THROWS_AS(noise_level(clean, Sinogram(1, 7)), std::invalid_argument);
}

TEST_CASE("additive kinds hit the target level exactly") {
    const Sinogram y = ramp_sinogram(64, 47);
    for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::uniform}) {
        NoiseSpec spec;
        spec.kind = kind;
        spec.target_delta = 8.0;
        spec.seed = RngSeed{123};
        const Sinogram noisy = add_noise(y, spec);
        CHECK(noise_level(y, noisy) == Catch::Approx(8.0).epsilon(1e-12));

        // Zero-mean pattern: the empirical mean stays within a few standard
        // errors of zero.
        double mean = 0.0;
        for (std::size_t i = 0; i < y.values().size(); ++i)
            mean += noisy.values()[i] - y.values()[i];
        mean /= static_cast<double>(y.values().size());
        CHECK(std::abs(mean) <= 4.0 * 8.0 / std::sqrt(double(y.values().size())));

        const Sinogram again = add_noise(y, spec);
        CHECK(again.values() == noisy.values());
        spec.seed = RngSeed{124};
        CHECK(add_noise(y, spec).values() != noisy.values());
    }
}

TEST_CASE("photon-count noise calibrates within one percent") {
    const Sinogram y = ramp_sinogram(48, 63);
    for (double delta : {1.0, 3.0}) {
        NoiseSpec spec;
        spec.kind = NoiseKind::poisson;
        spec.target_delta = delta;
        spec.seed = RngSeed{7};
        const Sinogram noisy = add_noise(y, spec);
        CHECK(noise_level(y, noisy) == Catch::Approx(delta).epsilon(0.01));
        for (double v : noisy.values()) CHECK(v >= 0.0);
        CHECK(add_noise(y, spec).values() == noisy.values());
    }

    Sinogram dark(8, 9);  // all zero: counts are identically zero
    NoiseSpec spec;
    spec.kind = NoiseKind::poisson;
    spec.target_delta = 1.0;
    CHECK_THROWS_AS(add_noise(dark, spec), calibration_error);
}

TEST_CASE("impulse noise calibrates and only writes extreme values") {
    Sinogram y(32, 33);
    std::size_t i = 0;
    for (double& v : y.values()) v = static_cast<double>(i++ % 11);
    NoiseSpec spec;
    spec.kind = NoiseKind::salt_pepper;
    spec.target_delta = 1.5;
    spec.seed = RngSeed{99};
    const Sinogram noisy = add_noise(y, spec);
    CHECK(noise_level(y, noisy) == Catch::Approx(1.5).epsilon(0.01));
    for (std::size_t j = 0; j < y.values().size(); ++j) {
        const double v = noisy.values()[j];
        const bool untouched = v == y.values()[j];
        CHECK((untouched || v == 0.0 || v == 10.0));
    }
    CHECK(add_noise(y, spec).values() == noisy.values());

    Sinogram flat(4, 5);
    for (double& v : flat.values()) v = 2.0;
    CHECK_THROWS_AS(add_noise(flat, spec), calibration_error);

    NoiseSpec huge = spec;
    huge.target_delta = 1e6;
    CHECK_THROWS_AS(add_noise(y, huge), calibration_error);
}

TEST_CASE("impulse noise ceiling marks the reachable targets") {
    Sinogram y(32, 33);
    std::size_t i = 0;
    for (double& v : y.values()) v = static_cast<double>(i++ % 11);
    // Values 0..10 uniformly: mean of (v^2 + (v-10)^2)/2 over a period is
    // 35, so the ceiling is sqrt(35).
    const double ceiling = max_salt_pepper_level(y);
    CHECK(ceiling == Catch::Approx(std::sqrt(35.0)).epsilon(1e-12));

    NoiseSpec spec;
    spec.kind = NoiseKind::salt_pepper;
    spec.seed = RngSeed{99};
    spec.target_delta = 0.9 * ceiling;
    const Sinogram noisy = add_noise(y, spec);
    CHECK(noise_level(y, noisy) == Catch::Approx(spec.target_delta).epsilon(0.01));

    spec.target_delta = 1.15 * ceiling;
    CHECK_THROWS_AS(add_noise(y, spec), calibration_error);

    Sinogram flat(4, 5);
    for (double& v : flat.values()) v = 2.0;
    CHECK(max_salt_pepper_level(flat) == 0.0);
}

TEST_CASE("noise argument validation") {
    const Sinogram y = ramp_sinogram(4, 5);
    NoiseSpec spec;
    spec.target_delta = 0.0;
    CHECK_THROWS_AS(add_noise(y, spec), std::invalid_argument);
    CHECK(noise_kind_from_string("salt_pepper") == NoiseKind::salt_pepper);
    CHECK(std::string(to_string(NoiseKind::poisson)) == "poisson");
    CHECK_THROWS_AS(noise_kind_from_string("speckle"), std::invalid_argument);
}
