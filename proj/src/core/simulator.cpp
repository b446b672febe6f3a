#include "simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rng.hpp"

namespace flowcast {

std::optional<Forcing> SimulatorConfig::parse_forcing(const std::string& spec) {
    if (spec.empty() || spec == "none") return std::nullopt;
    if (spec.rfind("kolmogorov:", 0) == 0) {
        std::string args = spec.substr(11);
        size_t comma = args.find(',');
        if (comma == std::string::npos) {
            throw config_error("forcing spec '" + spec + "' expects kolmogorov:<amplitude>,<wavenumber>");
        }
        try {
            Forcing f;
            f.amplitude = std::stod(args.substr(0, comma));
            f.wavenumber = std::stoi(args.substr(comma + 1));
            return f;
        } catch (const std::exception&) {
            throw config_error("cannot parse forcing spec '" + spec + "'");
        }
    }
    throw config_error("unknown forcing '" + spec + "' (supported: none, kolmogorov:<amp>,<k>)");
}

void SimulatorConfig::validate(const GridSpec& grid) const {
    if (dt <= 0.0) throw config_error("dt must be positive");
    if (steps_per_output < 1) throw config_error("steps_per_output must be at least 1");
    if (viscosity < 0.0) throw config_error("viscosity must be non-negative");
    if (viscosity > 0.0) {
        const int jmax = (grid.width - 1) / 3;
        const int imax = (grid.height - 1) / 3;
        const double kx = 2.0 * M_PI * jmax / grid.length_x;
        const double ky = 2.0 * M_PI * imax / grid.length_y;
        const double k2max = kx * kx + ky * ky;
        const double bound = 2.785 / (viscosity * k2max);
        if (dt > bound) {
            throw config_error("dt = " + std::to_string(dt) + " violates the RK4 viscous stability bound " +
                               std::to_string(bound) + " for this grid and viscosity");
        }
    }
}

VorticitySolver::VorticitySolver(const GridSpec& grid, const SimulatorConfig& cfg)
    : grid_(grid), cfg_(cfg), fft_(grid), kx_(wavenumbers_x(grid)), ky_(wavenumbers_y(grid)) {
    cfg.validate(grid);
    if (cfg.forcing) {
        std::vector<double> f(static_cast<size_t>(grid.cells()));
        for (int i = 0; i < grid.height; ++i) {
            const double fy = cfg.forcing->amplitude *
                              std::sin(cfg.forcing->wavenumber * 2.0 * M_PI * grid.y(i) / grid.length_y);
            for (int j = 0; j < grid.width; ++j) f[static_cast<size_t>(i) * grid.width + j] = fy;
        }
        forcing_spectrum_ = fft_.forward(f);
        if (cfg.dealias) dealias_inplace(forcing_spectrum_, grid);
    }
}

Spectrum VorticitySolver::rhs(const Spectrum& w) const {
    const int cols = grid_.width / 2 + 1;
    Spectrum su(w.size()), sv(w.size()), swx(w.size()), swy(w.size());
    for (int i = 0; i < grid_.height; ++i) {
        for (int j = 0; j < cols; ++j) {
            const size_t idx = static_cast<size_t>(i) * cols + j;
            const double k2 = kx_[j] * kx_[j] + ky_[i] * ky_[i];
            const std::complex<double> ik_x(0.0, kx_[j]);
            const std::complex<double> ik_y(0.0, ky_[i]);
            if (k2 != 0.0) {
                const std::complex<double> psi = w[idx] / k2;
                su[idx] = ik_y * psi;
                sv[idx] = -ik_x * psi;
            }
            swx[idx] = ik_x * w[idx];
            swy[idx] = ik_y * w[idx];
        }
    }
    const auto u = fft_.inverse(su);
    const auto v = fft_.inverse(sv);
    const auto wx = fft_.inverse(swx);
    const auto wy = fft_.inverse(swy);

    std::vector<double> advection(u.size());
    for (size_t i = 0; i < u.size(); ++i) advection[i] = u[i] * wx[i] + v[i] * wy[i];
    Spectrum out = fft_.forward(advection);
    if (cfg_.dealias) dealias_inplace(out, grid_);

    for (int i = 0; i < grid_.height; ++i) {
        for (int j = 0; j < cols; ++j) {
            const size_t idx = static_cast<size_t>(i) * cols + j;
            const double k2 = kx_[j] * kx_[j] + ky_[i] * ky_[i];
            out[idx] = -out[idx] - cfg_.viscosity * k2 * w[idx];
            if (!forcing_spectrum_.empty()) out[idx] += forcing_spectrum_[idx];
        }
    }
    return out;
}

void VorticitySolver::advance(Spectrum& w, int steps, int step_offset) const {
    const double dt = cfg_.dt;
    Spectrum stage(w.size());
    for (int s = 0; s < steps; ++s) {
        const Spectrum k1 = rhs(w);
        for (size_t i = 0; i < w.size(); ++i) stage[i] = w[i] + 0.5 * dt * k1[i];
        const Spectrum k2 = rhs(stage);
        for (size_t i = 0; i < w.size(); ++i) stage[i] = w[i] + 0.5 * dt * k2[i];
        const Spectrum k3 = rhs(stage);
        for (size_t i = 0; i < w.size(); ++i) stage[i] = w[i] + dt * k3[i];
        const Spectrum k4 = rhs(stage);
        for (size_t i = 0; i < w.size(); ++i) {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for (const auto& c : w) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                throw Error(ErrorKind::runtime,
                            "solver diverged at step " + std::to_string(step_offset + s + 1));
            }
        }
    }
}

LatentState propagate(const LatentState& z, int steps, const SimulatorConfig& cfg) {
    if (steps < 0) throw config_error("propagate: step count must be non-negative");
    if (steps == 0) return z;
    VorticitySolver solver(z.grid(), cfg);
    Spectrum w = pad_to_grid(z);
    if (cfg.dealias) dealias_inplace(w, z.grid());
    solver.advance(w, steps);
    return truncate_to_latent(w, z.grid(), z.modes(), z.time() + steps * cfg.dt);
}

std::vector<FlowState> rollout(const FlowState& x_init, int n_outputs, const SimulatorConfig& cfg) {
    LatentState z = encode(x_init, cfg.latent_modes);
    std::vector<FlowState> outputs;
    outputs.reserve(static_cast<size_t>(n_outputs));
    VorticitySolver solver(z.grid(), cfg);
    Spectrum w = pad_to_grid(z);
    if (cfg.dealias) dealias_inplace(w, z.grid());
    double t = z.time();
    for (int n = 0; n < n_outputs; ++n) {
        solver.advance(w, cfg.steps_per_output, n * cfg.steps_per_output);
        t += cfg.steps_per_output * cfg.dt;
        outputs.push_back(decode(truncate_to_latent(w, z.grid(), z.modes(), t)));
    }
    return outputs;
}

namespace {

MemberTrajectory run_member(const LatentState& z0, uint64_t seed, double perturbation, int n_outputs,
                            const SimulatorConfig& cfg) {
    MemberTrajectory traj;
    traj.seed = seed;
    LatentState z = perturb_latent(z0, perturbation, seed);
    VorticitySolver solver(z.grid(), cfg);
    Spectrum w = pad_to_grid(z);
    if (cfg.dealias) dealias_inplace(w, z.grid());
    double t = z.time();
    for (int n = 0; n < n_outputs; ++n) {
        solver.advance(w, cfg.steps_per_output, n * cfg.steps_per_output);
        t += cfg.steps_per_output * cfg.dt;
        traj.outputs.push_back(decode(truncate_to_latent(w, z.grid(), z.modes(), t)));
    }
    return traj;
}

}  // namespace

EnsembleForecast ensemble_rollout(const FlowState& x_init, int ensemble_size, double perturbation,
                                  int n_outputs, const SimulatorConfig& cfg) {
    if (ensemble_size < 1) throw config_error("ensemble size must be at least 1");
    if (perturbation < 0.0) throw config_error("perturbation magnitude must be non-negative");
    if (n_outputs < 1) throw config_error("ensemble rollout needs at least one output");

    const LatentState z0 = encode(x_init, cfg.latent_modes);

    EnsembleForecast forecast;
    forecast.ensemble_size = ensemble_size;
    forecast.perturbation = perturbation;
    forecast.base_seed = cfg.seed;
    forecast.members.resize(static_cast<size_t>(ensemble_size));

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n_workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(ensemble_size)));
    std::atomic<int> next{0};
    std::vector<std::string> failures(static_cast<size_t>(ensemble_size));
    auto worker = [&]() {
        for (int k = next.fetch_add(1); k < ensemble_size; k = next.fetch_add(1)) {
            try {
                forecast.members[static_cast<size_t>(k)] =
                    run_member(z0, member_seed(cfg.seed, static_cast<uint64_t>(k)), perturbation, n_outputs, cfg);
            } catch (const std::exception& e) {
                failures[static_cast<size_t>(k)] = e.what();
            }
        }
    };
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int k = 0; k < ensemble_size; ++k) {
        if (!failures[static_cast<size_t>(k)].empty()) {
            throw Error(ErrorKind::runtime,
                        "ensemble member " + std::to_string(k) + ": " + failures[static_cast<size_t>(k)]);
        }
    }

    const auto& channels = forecast.members[0].outputs[0].channels();
    for (int n = 0; n < n_outputs; ++n) {
        FlowState mean_state(forecast.members[0].outputs[static_cast<size_t>(n)].time());
        FlowState spread_state(mean_state.time());
        for (const auto& ch : channels) {
            auto [mean_f, spread_f] = compute_mean_spread(forecast.members, n, ch.variable());
            mean_state.add_channel(std::move(mean_f));
            spread_state.add_channel(std::move(spread_f));
        }
        forecast.mean_trajectory.push_back(std::move(mean_state));
        forecast.spread_trajectory.push_back(std::move(spread_state));
    }
    return forecast;
}

std::pair<ScalarField, ScalarField> compute_mean_spread(const std::vector<MemberTrajectory>& members,
                                                        int output_index, const std::string& channel) {
    const ScalarField& first = members[0].outputs[static_cast<size_t>(output_index)].channel(channel);
    const double inv_k = 1.0 / static_cast<double>(members.size());
    ScalarField mean_f(first.grid(), channel, first.unit());
    for (const auto& m : members) {
        const auto& vals = m.outputs[static_cast<size_t>(output_index)].channel(channel).values();
        for (size_t i = 0; i < vals.size(); ++i) mean_f.values()[i] += vals[i];
    }
    for (double& v : mean_f.values()) v *= inv_k;

    ScalarField spread_f(first.grid(), channel, first.unit());
    for (const auto& m : members) {
        const auto& vals = m.outputs[static_cast<size_t>(output_index)].channel(channel).values();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double d = vals[i] - mean_f.values()[i];
            spread_f.values()[i] += d * d;
        }
    }
    for (double& v : spread_f.values()) v = std::sqrt(v * inv_k);
    return {std::move(mean_f), std::move(spread_f)};
}

const ScalarField& ensemble_spread(const EnsembleForecast& e, int output_index, const std::string& channel) {
    if (output_index < 0 || output_index >= static_cast<int>(e.spread_trajectory.size())) {
        throw runtime_error("ensemble_spread: output index out of range");
    }
    return e.spread_trajectory[static_cast<size_t>(output_index)].channel(channel);
}

}  // namespace flowcast
