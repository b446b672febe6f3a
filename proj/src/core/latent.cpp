#include "latent.hpp"

#include <cmath>

#include "rng.hpp"

namespace flowcast {

LatentState::LatentState(GridSpec grid, int modes, double time)
    : grid_(grid), modes_(modes), time_(time), coeffs_(static_cast<size_t>(modes) * (modes / 2 + 1)) {
    if (modes < 4 || modes % 2 != 0) {
        throw config_error("latent mode count must be even and at least 4, got " + std::to_string(modes));
    }
    if (modes > std::min(grid.height, grid.width)) {
        throw config_error("grid " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                           " too small for latent truncation M=" + std::to_string(modes));
    }
}

std::vector<double> LatentState::dof_vector() const {
    LatentState tmp = *this;
    std::vector<double> out;
    out.reserve(static_cast<size_t>(dof_count()));
    tmp.for_each_dof_slot([&](std::complex<double>& c, bool self_conjugate, std::complex<double>*) {
        out.push_back(c.real());
        if (!self_conjugate) out.push_back(c.imag());
    });
    return out;
}

void LatentState::set_from_dof_vector(const std::vector<double>& dof) {
    if (dof.size() != static_cast<size_t>(dof_count())) {
        throw runtime_error("dof vector has wrong length");
    }
    size_t pos = 0;
    for_each_dof_slot([&](std::complex<double>& c, bool self_conjugate, std::complex<double>* partner) {
        double re = dof[pos++];
        double im = self_conjugate ? 0.0 : dof[pos++];
        c = {re, im};
        if (partner) *partner = std::conj(c);
    });
}

Spectrum pad_to_grid(const LatentState& z) {
    const GridSpec& g = z.grid();
    const int m = z.modes();
    const int gcols = g.width / 2 + 1;
    const int lcols = m / 2 + 1;
    Spectrum out(spectrum_size(g));
    const double scale = static_cast<double>(g.height) * g.width;
    for (int ky = -(m / 2 - 1); ky <= m / 2 - 1; ++ky) {
        const int li = ky >= 0 ? ky : ky + m;
        const int gi = ky >= 0 ? ky : ky + g.height;
        for (int j = 0; j <= m / 2 - 1; ++j) {
            out[static_cast<size_t>(gi) * gcols + j] =
                z.coeffs()[static_cast<size_t>(li) * lcols + j] * scale;
        }
    }
    return out;
}

LatentState truncate_to_latent(const Spectrum& grid_spectrum, const GridSpec& grid, int modes, double time) {
    LatentState z(grid, modes, time);
    const int gcols = grid.width / 2 + 1;
    const int lcols = modes / 2 + 1;
    const double scale = 1.0 / (static_cast<double>(grid.height) * grid.width);
    for (int ky = -(modes / 2 - 1); ky <= modes / 2 - 1; ++ky) {
        const int li = ky >= 0 ? ky : ky + modes;
        const int gi = ky >= 0 ? ky : ky + grid.height;
        for (int j = 0; j <= modes / 2 - 1; ++j) {
            z.coeffs()[static_cast<size_t>(li) * lcols + j] =
                grid_spectrum[static_cast<size_t>(gi) * gcols + j] * scale;
        }
    }
    return z;
}

LatentState encode(const ScalarField& vorticity_field, int modes) {
    vorticity_field.require_finite("encode");
    const GridSpec& g = vorticity_field.grid();
    if (modes == 0) modes = std::min(g.height, g.width) / 2;
    Fft fft(g);
    Spectrum spec = fft.forward(vorticity_field.values());
    return truncate_to_latent(spec, g, modes, 0.0);
}

LatentState encode(const FlowState& state, int modes) {
    LatentState z;
    if (state.has_channel("vorticity")) {
        z = encode(state.channel("vorticity"), modes);
    } else if (state.has_velocity()) {
        z = encode(vorticity(state.velocity()), modes);
    } else {
        throw runtime_error("encode: state has neither a vorticity channel nor a velocity pair");
    }
    z.set_time(state.time());
    return z;
}

FlowState decode(const LatentState& z) {
    const GridSpec& g = z.grid();
    Fft fft(g);
    Spectrum w = pad_to_grid(z);

    const auto kx = wavenumbers_x(g);
    const auto ky = wavenumbers_y(g);
    const int cols = g.width / 2 + 1;
    Spectrum su(w.size()), sv(w.size());
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < cols; ++j) {
            const size_t idx = static_cast<size_t>(i) * cols + j;
            const double k2 = kx[j] * kx[j] + ky[i] * ky[i];
            if (k2 == 0.0) continue;
            const std::complex<double> psi = w[idx] / k2;
            su[idx] = std::complex<double>(0.0, ky[i]) * psi;
            sv[idx] = std::complex<double>(0.0, -kx[j]) * psi;
        }
    }

    FlowState state(z.time());
    state.add_channel(ScalarField(g, "vorticity", "1/s", fft.inverse(w)));
    state.add_channel(ScalarField(g, "u", "m/s", fft.inverse(su)));
    state.add_channel(ScalarField(g, "v", "m/s", fft.inverse(sv)));
    return state;
}

LatentState perturb_latent(const LatentState& z, double magnitude, uint64_t seed) {
    if (magnitude < 0.0) throw config_error("perturbation magnitude must be non-negative");
    LatentState out = z;
    if (magnitude == 0.0) return out;
    Rng rng(seed);
    out.for_each_dof_slot([&](std::complex<double>& c, bool self_conjugate, std::complex<double>* partner) {
        double re = c.real() + magnitude * rng.next_gaussian();
        double im = self_conjugate ? 0.0 : c.imag() + magnitude * rng.next_gaussian();
        c = {re, im};
        if (partner) *partner = std::conj(c);
    });
    return out;
}

double latent_enstrophy(const LatentState& z) {
    const int m = z.modes();
    const int cols = m / 2 + 1;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double a2 = std::norm(z.coeffs()[static_cast<size_t>(i) * cols + j]);
            sum += (j == 0) ? a2 : 2.0 * a2;
        }
    }
    return z.grid().length_x * z.grid().length_y * sum;
}

}  // namespace flowcast
