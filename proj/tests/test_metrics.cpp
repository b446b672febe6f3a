#include "doctest.h"

#include <cmath>

#include "metrics.hpp"
#include "support.hpp"

using namespace flowcast;
using namespace flowcast::test;

namespace {

const GridSpec kGrid(64, 64);

ScalarField checkerboard(double amplitude) {
    ScalarField f(kGrid, "field", "1");
    for (int i = 0; i < kGrid.height; ++i) {
        for (int j = 0; j < kGrid.width; ++j) f.at(i, j) = ((i + j) % 2 == 0) ? amplitude : -amplitude;
    }
    return f;
}

}  // namespace

TEST_CASE("rmse closed forms") {
    auto a = random_smooth_field(kGrid, 1);
    CHECK(rmse(a, a) == 0.0);

    // Constant offset on dyadic values keeps every difference exact.
    auto board = checkerboard(1.0);
    auto shifted = board;
    for (double& v : shifted.values()) v += 0.5;
    CHECK(rmse(board, shifted) == 0.5);

    CHECK(rmse(ScalarField(kGrid, "field", "1"), checkerboard(1.0)) == 1.0);
    CHECK(rmse(a, board) == rmse(board, a));
}

TEST_CASE("rmse rejects mismatched shapes") {
    ScalarField a(kGrid, "x", "1");
    ScalarField b(GridSpec(32, 32), "x", "1");
    CHECK_THROWS_AS(rmse(a, b), Error);
}

TEST_CASE("ssim closed forms and symmetry") {
    auto a = random_smooth_field(kGrid, 2);
    CHECK(ssim(a, a, 2.0) == doctest::Approx(1.0).epsilon(1e-9));

    ScalarField c1(kGrid, "x", "1", 3.0), c2(kGrid, "x", "1", 3.0);
    CHECK(ssim(c1, c2, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

    // Anticorrelation: b = -a for a locally zero-mean structured field, so
    // the luminance term stays near one while the structure term flips sign.
    auto structured = checkerboard(1.0);
    auto negated = structured;
    for (double& v : negated.values()) v = -v;
    const double range = field_stats(structured).max - field_stats(structured).min;
    CHECK(ssim(structured, negated, range) < 0.0);

    auto b = random_smooth_field(kGrid, 3);
    CHECK(ssim(a, b, 2.0) == doctest::Approx(ssim(b, a, 2.0)).epsilon(1e-12));
}

TEST_CASE("psnr closed forms") {
    auto a = random_smooth_field(kGrid, 4);
    CHECK(std::isinf(psnr(a, a, 1.0)));

    // mse = L^2 gives exactly 0 dB.
    const double range = 2.0;
    CHECK(psnr(ScalarField(kGrid, "x", "1"), checkerboard(range), range) == doctest::Approx(0.0));

    // Offset of L/10 gives 20 dB.
    auto offset = a;
    for (double& v : offset.values()) v += range / 10.0;
    CHECK(psnr(a, offset, range) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("psnr is consistent with rmse") {
    auto a = random_smooth_field(kGrid, 5);
    auto b = random_smooth_field(kGrid, 6);
    const double range = 3.0;
    const double r = rmse(a, b);
    CHECK(psnr(a, b, range) == doctest::Approx(10.0 * std::log10(range * range / (r * r))).epsilon(1e-9));
}

TEST_CASE("evaluate_rollout") {
    std::vector<ScalarField> ref;
    for (uint64_t s = 0; s < 4; ++s) ref.push_back(random_smooth_field(kGrid, 10 + s));

    SUBCASE("perfect prediction") {
        auto report = evaluate_rollout(ref, ref);
        CHECK(report.rmse == 0.0);
        CHECK(report.ssim == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(report.psnr_infinite);
        CHECK(report.rmse_per_step.size() == 4);
    }
    SUBCASE("single step aggregates equal the step values") {
        std::vector<ScalarField> one_ref{ref[0]};
        std::vector<ScalarField> one_pred{ref[1]};
        auto report = evaluate_rollout(one_pred, one_ref);
        CHECK(report.rmse == report.rmse_per_step[0]);
        CHECK(report.ssim == report.ssim_per_step[0]);
        CHECK(report.psnr == doctest::Approx(report.psnr_per_step[0]).epsilon(1e-12));
    }
    SUBCASE("misaligned trajectories score strictly worse than aligned ones") {
        std::vector<ScalarField> shifted{ref.begin() + 1, ref.end()};
        std::vector<ScalarField> head{ref.begin(), ref.end() - 1};
        auto aligned = evaluate_rollout(head, head);
        auto misaligned = evaluate_rollout(shifted, head);
        CHECK(misaligned.rmse > aligned.rmse);
        CHECK(misaligned.ssim < aligned.ssim);
    }
    SUBCASE("length mismatch raises") {
        std::vector<ScalarField> shorter{ref[0]};
        CHECK_THROWS_WITH_AS(evaluate_rollout(shorter, ref), doctest::Contains("lengths differ"), Error);
    }
    SUBCASE("denormalization is applied before comparison") {
        std::vector<ScalarField> pred{ref[0]};
        std::vector<ScalarField> refs{ref[0]};
        auto raw = evaluate_rollout(pred, refs, 1.0);
        auto scaled = evaluate_rollout(pred, refs, 1.0, 10.0, 2.0);
        CHECK(raw.rmse == 0.0);
        CHECK(scaled.rmse == 0.0);  // identical inputs stay identical under denorm
    }
}
