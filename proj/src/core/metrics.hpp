#pragma once

#include <optional>
#include <vector>

#include "grid.hpp"

namespace flowcast {

struct MetricReport {
    double rmse = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;          // valid only when !psnr_infinite
    bool psnr_infinite = false;  // prediction and reference identical
    double data_range = 0.0;
    std::vector<double> rmse_per_step;
    std::vector<double> ssim_per_step;
    std::vector<double> psnr_per_step;  // +inf encoded as infinity()
};

double rmse(const ScalarField& a, const ScalarField& b);

// Windowed SSIM with an 11x11 Gaussian window (sigma 1.5) wrapped
// periodically, C1 = (0.01 L)^2, C2 = (0.03 L)^2.
double ssim(const ScalarField& a, const ScalarField& b, double data_range);

// 10 log10(L^2 / mse); identical inputs return +infinity.
double psnr(const ScalarField& a, const ScalarField& b, double data_range);

// Per-step and aggregate metrics over two equal-length trajectories of a
// single channel. Values can be denormalized with scale/offset before
// comparison. The data range defaults to the reference min/max across steps.
MetricReport evaluate_rollout(const std::vector<ScalarField>& predicted,
                              const std::vector<ScalarField>& reference,
                              std::optional<double> data_range = std::nullopt, double denorm_scale = 1.0,
                              double denorm_offset = 0.0);

}  // namespace flowcast
