#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "grid.hpp"
#include "spectral.hpp"

namespace flowcast {

// Compressed spectral state: Fourier amplitudes of the vorticity field,
// truncated to |kx|, |ky| <= M/2 - 1 (Nyquist rows excluded so the retained
// band round-trips exactly). Stored in the r2c layout of an M x M grid with
// amplitude normalization a_k = c_k / (H*W), i.e. f = sum a_k exp(i k.x).
class LatentState {
public:
    LatentState() = default;
    LatentState(GridSpec grid, int modes, double time = 0.0);

    const GridSpec& grid() const { return grid_; }
    int modes() const { return modes_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    Spectrum& coeffs() { return coeffs_; }
    const Spectrum& coeffs() const { return coeffs_; }

    // Independent real degrees of freedom in the retained band: (M-1)^2.
    int dof_count() const { return (modes_ - 1) * (modes_ - 1); }
    // The independent real numbers in a fixed deterministic order.
    std::vector<double> dof_vector() const;
    void set_from_dof_vector(const std::vector<double>& dof);

    // Visits each independent (real, imag) slot once; `self_conjugate` marks
    // modes whose imaginary part is pinned to zero.
    template <typename Fn>
    void for_each_dof_slot(Fn&& fn);

private:
    GridSpec grid_;
    int modes_ = 0;
    double time_ = 0.0;
    Spectrum coeffs_;  // M x (M/2 + 1), Nyquist row/column always zero
};

template <typename Fn>
void LatentState::for_each_dof_slot(Fn&& fn) {
    const int m = modes_;
    const int cols = m / 2 + 1;
    // Column 0: conjugate partners live in the same column.
    fn(coeffs_[0], true, &coeffs_[0]);  // ky = 0 mean mode, real
    for (int ky = 1; ky <= m / 2 - 1; ++ky) {
        fn(coeffs_[static_cast<size_t>(ky) * cols], false,
           &coeffs_[static_cast<size_t>(m - ky) * cols]);
    }
    // Interior columns: the partner is implicit in the r2c layout.
    for (int j = 1; j <= m / 2 - 1; ++j) {
        for (int i = 0; i < m; ++i) {
            if (i == m / 2) continue;
            fn(coeffs_[static_cast<size_t>(i) * cols + j], false, nullptr);
        }
    }
}

// Maps the latent band into a full-grid spectrum (FFTW-normalized
// coefficients) and back. truncate(pad(z)) is the identity.
Spectrum pad_to_grid(const LatentState& z);
LatentState truncate_to_latent(const Spectrum& grid_spectrum, const GridSpec& grid, int modes, double time);

// Encoder/decoder pair of the simulator. Default modes = H/2. encode expects
// a vorticity channel or a (u, v) pair to derive one from.
LatentState encode(const ScalarField& vorticity_field, int modes = 0);
LatentState encode(const FlowState& state, int modes = 0);
// Decoded states carry vorticity plus the induced divergence-free velocity.
FlowState decode(const LatentState& z);

// Adds magnitude * xi to the retained modes, xi standard normal per real
// degree of freedom (Hermitian-symmetrized); deterministic per seed.
LatentState perturb_latent(const LatentState& z, double magnitude, uint64_t seed);

// Enstrophy of the decoded field, computed spectrally (Parseval).
double latent_enstrophy(const LatentState& z);

}  // namespace flowcast
