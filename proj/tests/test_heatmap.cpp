#include <doctest.h>

#include <cmath>
#include <random>

#include "adaptmask/heatmap.hpp"

using namespace adaptmask;

static KeypointSet single_joint(double x, double y,
                                Visibility vis = Visibility::LabeledVisible) {
    KeypointSet k(1);
    k.coords[0] = {x, y};
    k.visibility[0] = vis;
    return k;
}

TEST_CASE("gaussian target peaks at the nearest cell") {
    auto stack = synthesize_targets(single_joint(128, 128), 2.0, 64, 64, 4.0);
    REQUIRE(stack.joint_count() == 1);
    CHECK(stack.maps[0].at(32, 32) == 1.0);
    CHECK(peak_cell(stack.maps[0]) == std::pair<int, int>{32, 32});
}

TEST_CASE("not-labeled joint synthesizes an all-zero map") {
    auto stack = synthesize_targets(single_joint(128, 128, Visibility::NotLabeled),
                                    2.0, 64, 64, 4.0);
    for (double v : stack.maps[0].values) CHECK(v == 0.0);
}

TEST_CASE("gaussian value two cells from the peak") {
    auto stack = synthesize_targets(single_joint(128, 128), 2.0, 64, 64, 4.0);
    double expected = std::exp(-(2.0 * 2.0) / (2.0 * 2.0 * 2.0));
    CHECK(stack.maps[0].at(32, 34) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.6065).epsilon(1e-3));
}

TEST_CASE("target synthesis rejects bad parameters") {
    auto k = single_joint(10, 10);
    CHECK_THROWS(synthesize_targets(k, 0.0, 64, 64, 4.0));
    CHECK_THROWS(synthesize_targets(k, -1.0, 64, 64, 4.0));
    CHECK_THROWS(synthesize_targets(k, 2.0, 0, 64, 4.0));
    CHECK_THROWS(synthesize_targets(k, 2.0, 64, 64, 0.0));
}

TEST_CASE("values are truncated beyond 3 sigma and below 1e-4") {
    auto stack = synthesize_targets(single_joint(128, 128), 2.0, 64, 64, 4.0);
    const auto& m = stack.maps[0];
    CHECK(m.at(32, 32 + 7) == 0.0); // 7 cells > 3*sigma
    for (double v : m.values) CHECK((v == 0.0 || v >= 1e-4));
}

TEST_CASE("responsiveness of all-zero maps is all zeros") {
    HeatmapStack stack;
    for (int j = 0; j < 4; ++j) stack.maps.emplace_back(j, 8, 8);
    auto r = responsiveness(stack);
    REQUIRE(r.size() == 4);
    for (double v : r) CHECK(v == 0.0);
}

TEST_CASE("responsiveness returns planted maxima in joint order") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> noise(0.0, 0.15);
    HeatmapStack stack;
    double planted[3] = {0.2, 0.9, 0.5};
    for (int j = 0; j < 3; ++j) {
        Heatmap m(j, 16, 16);
        for (double& v : m.values) v = noise(rng);
        m.at(3 + j, 5) = planted[j];
        stack.maps.push_back(m);
    }
    auto r = responsiveness(stack);
    // oracle: scan every cell independently
    for (int j = 0; j < 3; ++j) {
        double best = 0.0;
        for (double v : stack.maps[j].values) best = std::max(best, v);
        CHECK(r[j] == best);
        CHECK(r[j] == planted[j]);
    }
}

TEST_CASE("synthesized responsiveness is exactly 1 for labeled joints") {
    KeypointSet k(3);
    k.coords = {{20, 20}, {40, 12}, {8, 50}};
    k.visibility = {Visibility::LabeledVisible, Visibility::NotLabeled,
                    Visibility::LabeledVisible};
    auto r = responsiveness(synthesize_targets(k, 2.0, 32, 32, 2.0));
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 1.0);
}

TEST_CASE("decode recovers a synthesized joint within a quarter cell") {
    auto stack = synthesize_targets(single_joint(128, 128), 2.0, 64, 64, 4.0);
    auto decoded = decode_peaks(stack, 4.0);
    CHECK(std::abs(decoded.coords[0].x - 128.0) <= 1.0 + 1e-9);
    CHECK(std::abs(decoded.coords[0].y - 128.0) <= 1.0 + 1e-9);
    CHECK(decoded.visibility[0] == Visibility::LabeledVisible);
}

TEST_CASE("uniform map decodes to cell (0,0) by the tie rule") {
    HeatmapStack stack;
    Heatmap m(0, 16, 16);
    for (double& v : m.values) v = 0.7;
    stack.maps.push_back(m);
    CHECK(peak_cell(stack.maps[0]) == std::pair<int, int>{0, 0});
    auto decoded = decode_peaks(stack, 4.0);
    CHECK(decoded.coords[0].x < 4.0);
    CHECK(decoded.coords[0].y < 4.0);
}

TEST_CASE("two-peak map decodes near the higher peak") {
    HeatmapStack stack;
    Heatmap m(0, 64, 64);
    m.at(10, 10) = 0.9;
    m.at(50, 50) = 0.899;
    stack.maps.push_back(m);
    auto decoded = decode_peaks(stack, 1.0);
    CHECK(std::abs(decoded.coords[0].x - 10.0) <= 1.0);
    CHECK(std::abs(decoded.coords[0].y - 10.0) <= 1.0);
}

TEST_CASE("synthesize/decode round trip over random keypoint sets") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(8.0, 248.0);
    std::uniform_real_distribution<double> sig(1.0, 4.0);
    const double stride = 4.0;
    for (int trial = 0; trial < 100; ++trial) {
        KeypointSet k(5);
        for (int j = 0; j < 5; ++j) {
            k.coords[j] = {pos(rng), pos(rng)};
            k.visibility[j] = Visibility::LabeledVisible;
        }
        double sigma = sig(rng);
        auto decoded = decode_peaks(synthesize_targets(k, sigma, 64, 64, stride), stride);
        for (int j = 0; j < 5; ++j) {
            double dx = decoded.coords[j].x - k.coords[j].x;
            double dy = decoded.coords[j].y - k.coords[j].y;
            CHECK(std::abs(dx) <= stride / 2 + 1);
            CHECK(std::abs(dy) <= stride / 2 + 1);
        }
    }
}

TEST_CASE("gaussian is symmetric about a centered peak") {
    // joint snapped exactly to cell (16,16) of a 33x33 map
    auto stack = synthesize_targets(single_joint(64, 64), 2.5, 33, 33, 4.0);
    const auto& m = stack.maps[0];
    for (int dy = -6; dy <= 6; ++dy)
        for (int dx = -6; dx <= 6; ++dx) {
            CHECK(m.at(16 + dy, 16 + dx) == m.at(16 - dy, 16 - dx));
            CHECK(m.at(16 + dy, 16 + dx) == m.at(16 + dx, 16 + dy));
        }
}

TEST_CASE("tensor/stack conversions round trip") {
    KeypointSet k(3);
    k.coords = {{20, 20}, {40, 12}, {8, 50}};
    k.visibility = {Visibility::LabeledVisible, Visibility::LabeledVisible,
                    Visibility::LabeledVisible};
    auto stack = synthesize_targets(k, 2.0, 32, 32, 2.0);
    Tensor t = tensor_from_stack(stack);
    auto back = stack_from_tensor(t, 0, stack.sample_id);
    REQUIRE(back.joint_count() == 3);
    for (int j = 0; j < 3; ++j) CHECK(back.maps[j].values == stack.maps[j].values);
}
