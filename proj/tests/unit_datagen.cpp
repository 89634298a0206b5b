#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "chromaforge/datagen.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/rng.hpp"
#include "testsupport.hpp"

using namespace chromaforge;

TEST_CASE("hsv_to_rgb hits the primary anchors and wraps hue") {
    auto red = hsv_to_rgb(0.0, 1.0, 1.0);
    CHECK(red[0] == 1.0);
    CHECK(red[1] == 0.0);
    CHECK(red[2] == 0.0);

    auto green = hsv_to_rgb(1.0 / 3.0, 1.0, 1.0);
    CHECK(green[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(green[1] == 1.0);

    auto blue = hsv_to_rgb(2.0 / 3.0, 1.0, 1.0);
    CHECK(blue[2] == 1.0);
    CHECK(blue[0] == doctest::Approx(0.0).epsilon(1e-12));

    // Zero saturation ignores hue entirely.
    auto gray = hsv_to_rgb(0.123, 0.0, 0.6);
    CHECK(gray[0] == 0.6);
    CHECK(gray[1] == 0.6);
    CHECK(gray[2] == 0.6);

    // Hue wraps modulo 1.
    auto wrapped = hsv_to_rgb(1.25, 0.8, 0.9);
    auto base = hsv_to_rgb(0.25, 0.8, 0.9);
    for (int c = 0; c < 3; ++c) CHECK(wrapped[c] == base[c]);
}

TEST_CASE("generation is bitwise deterministic and splits 4:1") {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.per_class = 10;
    spec.height = 12;
    spec.width = 12;
    spec.seed = 21;

    const Dataset a = generate_synthetic(spec);
    const Dataset b = generate_synthetic(spec);
    REQUIRE(a.train.size() == 3 * 8);
    REQUIRE(a.holdout.size() == 3 * 2);
    CHECK(a.num_classes == 3);
    for (size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].label == b.train[i].label);
        CHECK(ts::bitwise_equal(a.train[i].image.pixels, b.train[i].image.pixels));
    }

    int labels_seen[3] = {0, 0, 0};
    for (const auto& ex : a.holdout) {
        REQUIRE(ex.label >= 0);
        REQUIRE(ex.label < 3);
        ++labels_seen[ex.label];
    }
    for (int c = 0; c < 3; ++c) CHECK(labels_seen[c] == 2);

    spec.seed = 22;
    const Dataset c = generate_synthetic(spec);
    CHECK(!ts::bitwise_equal(a.train[0].image.pixels, c.train[0].image.pixels));
}

TEST_CASE("a degenerate spec collapses to a flat hsv color") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.per_class = 5;
    spec.height = 8;
    spec.width = 8;
    spec.hue_width = 1e-9;
    spec.hue_margin = 0.01;
    spec.saturation_lo = spec.saturation_hi = 0.7;
    spec.value_lo = spec.value_hi = 0.8;
    spec.texture_noise = 0.0;
    spec.seed = 4;

    const Dataset ds = generate_synthetic(spec);
    for (const auto& ex : ds.train) {
        const auto want = hsv_to_rgb(ex.label / 4.0, 0.7, 0.8);
        for (size_t p = 0; p < ex.image.num_pixels(); ++p)
            for (size_t c = 0; c < 3; ++c)
                CHECK(std::abs(ex.image.pixels[p * 3 + c] - want[c]) < 1e-6);
    }
}

TEST_CASE("overlapping hue bands are rejected") {
    SyntheticSpec spec;
    spec.num_classes = 10;
    spec.hue_width = 0.09;
    spec.hue_margin = 0.05; // 1/10 - 0.09 = 0.01 < margin
    CHECK_THROWS_AS(spec.validate(), ValueError);

    spec = SyntheticSpec{};
    spec.num_classes = 1;
    CHECK_THROWS_AS(spec.validate(), ValueError);
    spec = SyntheticSpec{};
    spec.saturation_lo = 0.9;
    spec.saturation_hi = 0.5;
    CHECK_THROWS_AS(spec.validate(), ValueError);
    CHECK_NOTHROW(SyntheticSpec{}.validate());
}

TEST_CASE("save/load round trips through 8-bit quantization") {
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.per_class = 6;
    spec.height = 9;
    spec.width = 7;
    spec.seed = 33;
    const Dataset ds = generate_synthetic(spec);

    ts::TempDir dir("dataset");
    save_dataset(ds, dir.str());
    const Dataset back = load_dataset(dir.str());
    REQUIRE(back.train.size() == ds.train.size());
    REQUIRE(back.holdout.size() == ds.holdout.size());
    CHECK(back.num_classes == 2);

    for (size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(back.train[i].label == ds.train[i].label);
        const auto& orig = ds.train[i].image.pixels;
        const auto& got = back.train[i].image.pixels;
        REQUIRE(got.size() == orig.size());
        for (size_t p = 0; p < orig.size(); ++p) {
            const double quant = std::round(orig[p] * 255.0) / 255.0;
            CHECK(std::abs(got[p] - quant) < 1e-15);
        }
    }

    const auto holdout = load_split_dir(dir.str("holdout"));
    REQUIRE(holdout.size() == ds.holdout.size());
    for (size_t i = 0; i < holdout.size(); ++i)
        CHECK(holdout[i].label == ds.holdout[i].label);
}

TEST_CASE("binary batches parse the planar layout") {
    ts::TempDir dir("bin");
    const std::string path = dir.str("batch.bin");
    {
        // Two 2x2 records: label byte, then 4 bytes R, 4 G, 4 B.
        std::ofstream out(path, std::ios::binary);
        const uint8_t rec0[13] = {1, 255, 0, 0, 0, 0, 128, 0, 0, 0, 0, 64, 0};
        const uint8_t rec1[13] = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
        out.write(reinterpret_cast<const char*>(rec0), 13);
        out.write(reinterpret_cast<const char*>(rec1), 13);
    }
    const auto batch = load_binary_batch(path, 2, 2);
    REQUIRE(batch.size() == 2);
    CHECK(batch[0].label == 1);
    CHECK(batch[1].label == 0);
    // Pixel (0,0) of record 0: R=255, G=0, B=0.
    CHECK(batch[0].image.at(0, 0, 0) == 1.0);
    CHECK(batch[0].image.at(0, 0, 1) == 0.0);
    // Pixel (0,1): R=0, G=128, B=0.
    CHECK(batch[0].image.at(0, 1, 0) == 0.0);
    CHECK(batch[0].image.at(0, 1, 1) == 128.0 / 255.0);
    // Pixel (1,0) of record 1: R=30, G=70, B=110.
    CHECK(batch[1].image.at(1, 0, 0) == 30.0 / 255.0);
    CHECK(batch[1].image.at(1, 0, 1) == 70.0 / 255.0);
    CHECK(batch[1].image.at(1, 0, 2) == 110.0 / 255.0);

    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.write("x", 1); // no longer a whole number of records
    }
    CHECK_THROWS_AS(load_binary_batch(path, 2, 2), IoError);
}
