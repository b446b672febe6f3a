#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowcast {

namespace {

void require_same_shape(const ScalarField& a, const ScalarField& b, const char* op) {
    if (!(a.grid() == b.grid())) {
        throw runtime_error(std::string(op) + ": field shapes do not match");
    }
}

double mse(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.values().size());
}

// 11x11 Gaussian window, sigma = 1.5, normalized to sum 1.
std::vector<double> gaussian_window() {
    const int radius = 5;
    std::vector<double> w(121);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            const double g = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
            w[static_cast<size_t>((i + radius) * 11 + (j + radius))] = g;
            sum += g;
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

double rmse(const ScalarField& a, const ScalarField& b) {
    require_same_shape(a, b, "rmse");
    return std::sqrt(mse(a, b));
}

double ssim(const ScalarField& a, const ScalarField& b, double data_range) {
    require_same_shape(a, b, "ssim");
    if (data_range <= 0.0) throw runtime_error("ssim: data range must be positive");
    static const std::vector<double> window = gaussian_window();
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const int radius = 5;
    const GridSpec& g = a.grid();

    double total = 0.0;
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            double mu_a = 0.0, mu_b = 0.0;
            for (int di = -radius; di <= radius; ++di) {
                for (int dj = -radius; dj <= radius; ++dj) {
                    const double w = window[static_cast<size_t>((di + radius) * 11 + (dj + radius))];
                    mu_a += w * a.at_wrapped(i + di, j + dj);
                    mu_b += w * b.at_wrapped(i + di, j + dj);
                }
            }
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int di = -radius; di <= radius; ++di) {
                for (int dj = -radius; dj <= radius; ++dj) {
                    const double w = window[static_cast<size_t>((di + radius) * 11 + (dj + radius))];
                    const double da = a.at_wrapped(i + di, j + dj) - mu_a;
                    const double db = b.at_wrapped(i + di, j + dj) - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            }
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
        }
    }
    return total / static_cast<double>(g.cells());
}

double psnr(const ScalarField& a, const ScalarField& b, double data_range) {
    require_same_shape(a, b, "psnr");
    if (data_range <= 0.0) throw runtime_error("psnr: data range must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / m);
}

MetricReport evaluate_rollout(const std::vector<ScalarField>& predicted,
                              const std::vector<ScalarField>& reference,
                              std::optional<double> data_range, double denorm_scale,
                              double denorm_offset) {
    if (predicted.size() != reference.size()) {
        throw runtime_error("evaluate_rollout: trajectory lengths differ (" +
                            std::to_string(predicted.size()) + " vs " + std::to_string(reference.size()) +
                            ")");
    }
    if (predicted.empty()) throw runtime_error("evaluate_rollout: empty trajectories");

    auto denorm = [&](const ScalarField& f) {
        ScalarField out = f;
        for (double& v : out.values()) v = v * denorm_scale + denorm_offset;
        return out;
    };
    std::vector<ScalarField> pred, ref;
    for (size_t i = 0; i < predicted.size(); ++i) {
        require_same_shape(predicted[i], reference[i], "evaluate_rollout");
        pred.push_back(denorm(predicted[i]));
        ref.push_back(denorm(reference[i]));
    }

    double range;
    if (data_range) {
        range = *data_range;
    } else {
        double lo = ref[0].values()[0], hi = lo;
        for (const auto& f : ref) {
            auto s = field_stats(f);
            lo = std::min(lo, s.min);
            hi = std::max(hi, s.max);
        }
        range = hi - lo;
        if (range <= 0.0) range = 1.0;  // constant reference
    }

    MetricReport report;
    report.data_range = range;
    double mse_sum = 0.0, ssim_sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double step_mse = mse(pred[i], ref[i]);
        mse_sum += step_mse;
        report.rmse_per_step.push_back(std::sqrt(step_mse));
        const double s = ssim(pred[i], ref[i], range);
        ssim_sum += s;
        report.ssim_per_step.push_back(s);
        report.psnr_per_step.push_back(psnr(pred[i], ref[i], range));
    }
    const double agg_mse = mse_sum / static_cast<double>(pred.size());
    report.rmse = std::sqrt(agg_mse);
    report.ssim = ssim_sum / static_cast<double>(pred.size());
    if (agg_mse == 0.0) {
        report.psnr_infinite = true;
        report.psnr = std::numeric_limits<double>::infinity();
    } else {
        report.psnr = 10.0 * std::log10(range * range / agg_mse);
    }
    return report;
}

}  // namespace flowcast
