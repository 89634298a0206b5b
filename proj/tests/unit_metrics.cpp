#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chromaforge/errors.hpp"
#include "chromaforge/metrics.hpp"
#include "testsupport.hpp"

using namespace chromaforge;

TEST_CASE("the worked single-coordinate example") {
    // 2x2 image, 12 coordinates; one channel moves from 0.0 by +0.1:
    // L0 = 1/12 = 8.33%, L2 = 0.1, Linf = 25.5 on the 255 scale.
    Image orig(2, 2, 0.0);
    Image adv = orig;
    adv.pixels[4] += 0.1;
    const PerturbationNorms n = perturbation_norms(orig, adv);
    CHECK(n.l0_percent == doctest::Approx(100.0 / 12.0).epsilon(1e-12));
    CHECK(n.l2 == 0.1);
    CHECK(n.linf_255 == 25.5);
}

TEST_CASE("identical images have all-zero norms") {
    Rng rng(3);
    const Image img = ts::random_image(rng, 5, 4);
    const PerturbationNorms n = perturbation_norms(img, img);
    CHECK(n.l0_percent == 0.0);
    CHECK(n.l2 == 0.0);
    CHECK(n.linf_255 == 0.0);
}

TEST_CASE("l0 ignores sub-threshold wiggle and counts real changes") {
    Image orig(1, 2, 0.5);
    Image adv = orig;
    adv.pixels[0] += 1e-10; // below the 1e-9 default threshold
    adv.pixels[3] += 1e-8;  // above it
    const PerturbationNorms n = perturbation_norms(orig, adv);
    CHECK(n.l0_percent == doctest::Approx(100.0 / 6.0).epsilon(1e-12));

    const PerturbationNorms loose = perturbation_norms(orig, adv, 1e-12);
    CHECK(loose.l0_percent == doctest::Approx(200.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("spatial l0 counts whole pixels") {
    // One pixel with two changed channels: 2/12 coordinates but 1/4 pixels.
    Image orig(2, 2, 0.3);
    Image adv = orig;
    adv.pixels[0] += 0.05;
    adv.pixels[1] -= 0.05;
    const PerturbationNorms coord = perturbation_norms(orig, adv);
    CHECK(coord.l0_percent == doctest::Approx(200.0 / 12.0).epsilon(1e-12));
    const PerturbationNorms spatial = perturbation_norms(orig, adv, 1e-9, true);
    CHECK(spatial.l0_percent == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("norms match a brute-force oracle on random pairs") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Image a = ts::random_image(rng, 7, 5);
        Image b = a;
        for (double& p : b.pixels)
            if (rng.uniform() < 0.3) p = std::clamp(p + rng.uniform(-0.2, 0.2), 0.0, 1.0);

        size_t changed = 0;
        double sumsq = 0.0, worst = 0.0;
        for (size_t i = 0; i < a.pixels.size(); ++i) {
            const double d = std::abs(b.pixels[i] - a.pixels[i]);
            if (d > 1e-9) ++changed;
            sumsq += d * d;
            worst = std::max(worst, d);
        }
        const PerturbationNorms n = perturbation_norms(a, b);
        CHECK(std::abs(n.l0_percent - 100.0 * changed / a.pixels.size()) <= 1e-12);
        CHECK(std::abs(n.l2 - std::sqrt(sumsq)) <= 1e-12);
        CHECK(std::abs(n.linf_255 - worst * 255.0) <= 1e-12);
    }
}

TEST_CASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(perturbation_norms(Image(2, 2), Image(2, 3)), ShapeError);
    CHECK_THROWS_AS(perturbation_norms(Image(), Image()), ValueError);
}
