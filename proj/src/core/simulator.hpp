#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "latent.hpp"

namespace flowcast {

// Sinusoidal vorticity forcing f(y) = amplitude * sin(wavenumber * 2*pi*y/Ly)
// (the vorticity-form equivalent of a Kolmogorov body force on u).
struct Forcing {
    double amplitude = 0.0;
    int wavenumber = 0;
};

struct SimulatorConfig {
    double viscosity = 0.01;
    double dt = 1e-3;
    int steps_per_output = 10;
    bool dealias = true;
    std::optional<Forcing> forcing;  // nullopt = unforced
    uint64_t seed = 0;
    int latent_modes = 0;  // 0 = default min(H, W) / 2

    // Parses "none" or "kolmogorov:<amplitude>,<wavenumber>".
    static std::optional<Forcing> parse_forcing(const std::string& spec);

    // Enforces the documented RK4 viscous stability bound
    // dt <= 2.785 / (viscosity * k_max^2) on the dealiased band. Advective
    // stability is monitored at runtime via the divergence check on modes.
    void validate(const GridSpec& grid) const;
};

// Pseudo-spectral vorticity-form Navier-Stokes stepper: RK4 in time, 2/3-rule
// dealiasing, exact spectral viscosity. Operates on full-grid spectra; one
// instance per thread.
class VorticitySolver {
public:
    VorticitySolver(const GridSpec& grid, const SimulatorConfig& cfg);

    // Advances `steps` RK4 steps of size cfg.dt. Throws a runtime error
    // naming the step index if the state stops being finite.
    void advance(Spectrum& w, int steps, int step_offset = 0) const;

private:
    Spectrum rhs(const Spectrum& w) const;

    GridSpec grid_;
    SimulatorConfig cfg_;
    Fft fft_;
    std::vector<double> kx_, ky_;
    Spectrum forcing_spectrum_;
};

// Deterministic latent propagator standing in for the learned component of
// the forecasting stack: same encode -> perturb -> propagate -> decode
// interface, numerical vorticity dynamics behind it.
LatentState propagate(const LatentState& z, int steps, const SimulatorConfig& cfg);

struct MemberTrajectory {
    uint64_t seed = 0;
    std::vector<FlowState> outputs;
};

// K perturbed trajectories plus their per-output mean and spread fields.
// Spread is the population form sqrt((1/K) * sum (x_k - mean)^2), computed
// per cell and per channel.
struct EnsembleForecast {
    int ensemble_size = 0;
    double perturbation = 0.0;
    uint64_t base_seed = 0;
    std::vector<MemberTrajectory> members;
    std::vector<FlowState> mean_trajectory;
    std::vector<FlowState> spread_trajectory;
};

// Deterministic single rollout (no perturbation); outputs exclude the
// initial state.
std::vector<FlowState> rollout(const FlowState& x_init, int n_outputs, const SimulatorConfig& cfg);

// Member k runs decode(propagate(perturb(encode(x_init), lambda, seed_k))),
// seed_k = member_seed(cfg.seed, k). Members run in parallel; the result is
// ordered by member index and independent of scheduling.
EnsembleForecast ensemble_rollout(const FlowState& x_init, int ensemble_size, double perturbation,
                                  int n_outputs, const SimulatorConfig& cfg);

// Spread field for one output time and channel, straight from the stored
// trajectory.
const ScalarField& ensemble_spread(const EnsembleForecast& e, int output_index,
                                   const std::string& channel = "vorticity");

// Recomputes the mean/spread pair from the member trajectories.
std::pair<ScalarField, ScalarField> compute_mean_spread(const std::vector<MemberTrajectory>& members,
                                                        int output_index, const std::string& channel);

}  // namespace flowcast
