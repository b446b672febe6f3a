#include "spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

namespace flowcast {

namespace {

// FFTW plan creation/destruction is not thread-safe.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

void require_spectral_input(const ScalarField& f, const char* op) {
    if (!f.grid().periodic) throw runtime_error(std::string(op) + ": spectral operators require a periodic grid");
    f.require_finite(op);
}

}  // namespace

Fft::Fft(const GridSpec& grid) : grid_(grid) {
    const int h = grid.height, w = grid.width;
    real_buf_ = fftw_alloc_real(static_cast<size_t>(h) * w);
    complex_buf_ = fftw_alloc_complex(spectrum_size(grid));
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan_forward_ = fftw_plan_dft_r2c_2d(h, w, real_buf_, static_cast<fftw_complex*>(complex_buf_),
                                         FFTW_ESTIMATE);
    plan_inverse_ = fftw_plan_dft_c2r_2d(h, w, static_cast<fftw_complex*>(complex_buf_), real_buf_,
                                         FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
    fftw_free(real_buf_);
    fftw_free(complex_buf_);
}

Spectrum Fft::forward(const std::vector<double>& values) const {
    std::memcpy(real_buf_, values.data(), values.size() * sizeof(double));
    fftw_execute(static_cast<fftw_plan>(plan_forward_));
    Spectrum out(spectrum_size(grid_));
    std::memcpy(out.data(), complex_buf_, out.size() * sizeof(std::complex<double>));
    return out;
}

std::vector<double> Fft::inverse(const Spectrum& spec) const {
    std::memcpy(complex_buf_, spec.data(), spec.size() * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(plan_inverse_));
    std::vector<double> out(static_cast<size_t>(grid_.cells()));
    const double scale = 1.0 / grid_.cells();
    for (size_t i = 0; i < out.size(); ++i) out[i] = real_buf_[i] * scale;
    return out;
}

std::vector<double> wavenumbers_x(const GridSpec& g) {
    std::vector<double> k(g.width / 2 + 1);
    for (int j = 0; j < g.width / 2 + 1; ++j) k[j] = 2.0 * M_PI * j / g.length_x;
    return k;
}

std::vector<double> wavenumbers_y(const GridSpec& g) {
    std::vector<double> k(g.height);
    for (int i = 0; i < g.height; ++i) k[i] = 2.0 * M_PI * signed_row_index(i, g.height) / g.length_y;
    return k;
}

void derivative_x_inplace(Spectrum& spec, const GridSpec& g) {
    const auto kx = wavenumbers_x(g);
    const int cols = g.width / 2 + 1;
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < cols; ++j) {
            auto& c = spec[static_cast<size_t>(i) * cols + j];
            c = (j == g.width / 2) ? 0.0 : std::complex<double>(0.0, kx[j]) * c;
        }
    }
}

void derivative_y_inplace(Spectrum& spec, const GridSpec& g) {
    const auto ky = wavenumbers_y(g);
    const int cols = g.width / 2 + 1;
    for (int i = 0; i < g.height; ++i) {
        const bool nyquist = (i == g.height / 2);
        for (int j = 0; j < cols; ++j) {
            auto& c = spec[static_cast<size_t>(i) * cols + j];
            c = nyquist ? 0.0 : std::complex<double>(0.0, ky[i]) * c;
        }
    }
}

void dealias_inplace(Spectrum& spec, const GridSpec& g) {
    const int cols = g.width / 2 + 1;
    for (int i = 0; i < g.height; ++i) {
        const int m = std::abs(signed_row_index(i, g.height));
        for (int j = 0; j < cols; ++j) {
            if (3 * j >= g.width || 3 * m >= g.height) {
                spec[static_cast<size_t>(i) * cols + j] = 0.0;
            }
        }
    }
}

ScalarField divergence(const VectorField& f) {
    require_spectral_input(f.u, "divergence");
    require_spectral_input(f.v, "divergence");
    Fft fft(f.grid());
    Spectrum su = fft.forward(f.u.values());
    Spectrum sv = fft.forward(f.v.values());
    derivative_x_inplace(su, f.grid());
    derivative_y_inplace(sv, f.grid());
    for (size_t i = 0; i < su.size(); ++i) su[i] += sv[i];
    return ScalarField(f.grid(), "divergence", "1/s", fft.inverse(su));
}

ScalarField vorticity(const VectorField& f) {
    require_spectral_input(f.u, "vorticity");
    require_spectral_input(f.v, "vorticity");
    Fft fft(f.grid());
    Spectrum su = fft.forward(f.u.values());
    Spectrum sv = fft.forward(f.v.values());
    derivative_y_inplace(su, f.grid());
    derivative_x_inplace(sv, f.grid());
    for (size_t i = 0; i < sv.size(); ++i) sv[i] -= su[i];
    return ScalarField(f.grid(), "vorticity", "1/s", fft.inverse(sv));
}

VectorField velocity_from_vorticity(const ScalarField& omega) {
    require_spectral_input(omega, "velocity_from_vorticity");
    const GridSpec& g = omega.grid();
    Fft fft(g);
    Spectrum w = fft.forward(omega.values());

    const auto kx = wavenumbers_x(g);
    const auto ky = wavenumbers_y(g);
    const int cols = g.width / 2 + 1;
    Spectrum su(w.size()), sv(w.size());
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < cols; ++j) {
            const size_t idx = static_cast<size_t>(i) * cols + j;
            const double k2 = kx[j] * kx[j] + ky[i] * ky[i];
            if (k2 == 0.0) {
                su[idx] = 0.0;
                sv[idx] = 0.0;
                continue;
            }
            const std::complex<double> psi = w[idx] / k2;
            su[idx] = std::complex<double>(0.0, ky[i]) * psi;
            sv[idx] = std::complex<double>(0.0, -kx[j]) * psi;
        }
    }
    ScalarField u(g, "u", omega.unit() == "1/s" ? "m/s" : "1", fft.inverse(su));
    ScalarField v(g, "v", u.unit(), fft.inverse(sv));
    return VectorField(std::move(u), std::move(v));
}

ScalarField strain_magnitude(const VectorField& f) {
    require_spectral_input(f.u, "strain_magnitude");
    require_spectral_input(f.v, "strain_magnitude");
    const GridSpec& g = f.grid();
    Fft fft(g);
    Spectrum su = fft.forward(f.u.values());
    Spectrum sv = fft.forward(f.v.values());

    Spectrum ux = su, uy = su, vx = sv, vy = sv;
    derivative_x_inplace(ux, g);
    derivative_y_inplace(uy, g);
    derivative_x_inplace(vx, g);
    derivative_y_inplace(vy, g);
    auto fux = fft.inverse(ux), fuy = fft.inverse(uy), fvx = fft.inverse(vx), fvy = fft.inverse(vy);
    std::vector<double> out(fux.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = std::sqrt(fux[i] * fux[i] + fuy[i] * fuy[i] + fvx[i] * fvx[i] + fvy[i] * fvy[i]);
    }
    return ScalarField(g, "strain", "1/s", std::move(out));
}

}  // namespace flowcast
