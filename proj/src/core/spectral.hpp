#pragma once

#include <complex>
#include <vector>

#include "grid.hpp"

namespace flowcast {

// Spectrum of a real H x W field in FFTW r2c layout: H rows of (W/2 + 1)
// complex entries, row-major. Row i holds signed wavenumber index
// i <= H/2 ? i : i - H; column j holds kx index j in [0, W/2].
using Spectrum = std::vector<std::complex<double>>;

inline size_t spectrum_size(const GridSpec& g) {
    return static_cast<size_t>(g.height) * (g.width / 2 + 1);
}

// Thin FFTW wrapper. One instance per thread: the internal buffers are not
// shared-safe. Plans use FFTW_ESTIMATE so repeated runs are bit-identical.
class Fft {
public:
    explicit Fft(const GridSpec& grid);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    const GridSpec& grid() const { return grid_; }

    // Unnormalized forward transform of a real field.
    Spectrum forward(const std::vector<double>& values) const;
    // Inverse transform scaled by 1/(H*W); inverse(forward(f)) == f.
    std::vector<double> inverse(const Spectrum& spec) const;

private:
    GridSpec grid_;
    void* plan_forward_;
    void* plan_inverse_;
    double* real_buf_;
    void* complex_buf_;
};

// Signed wavenumber for spectrum row i.
inline int signed_row_index(int i, int height) { return i <= height / 2 ? i : i - height; }

// Angular wavenumbers 2*pi*n/L for the r2c layout.
std::vector<double> wavenumbers_x(const GridSpec& g);
std::vector<double> wavenumbers_y(const GridSpec& g);

// In-place spectral derivatives (multiplication by i*k). The Nyquist mode of
// the differentiated direction is zeroed, as usual for odd derivatives.
void derivative_x_inplace(Spectrum& spec, const GridSpec& g);
void derivative_y_inplace(Spectrum& spec, const GridSpec& g);

// Zero all modes with 3*|kx_index| >= W or 3*|ky_index| >= H (2/3 rule).
void dealias_inplace(Spectrum& spec, const GridSpec& g);

ScalarField divergence(const VectorField& f);
ScalarField vorticity(const VectorField& f);
// Stream-function inversion; the k=0 vorticity mode is dropped. The result
// satisfies divergence(v) ~ 0 and vorticity(v) ~ omega to spectral accuracy.
VectorField velocity_from_vorticity(const ScalarField& omega);
// Frobenius norm of the velocity gradient tensor, used for shear detection.
ScalarField strain_magnitude(const VectorField& f);

}  // namespace flowcast
