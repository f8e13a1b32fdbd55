#pragma once

#include <complex>
#include <vector>

namespace ballistica {

// In-place radix-2 FFT, unnormalized: X_k = sum_n x_n exp(-2 pi i k n / N).
// N must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

// FFT along one axis of a dense row-major d-dimensional array with extent M
// per axis.
void fft_axis(std::vector<std::complex<double>>& data, int dim, int extent, int axis,
              bool inverse = false);

// Full d-dimensional transform (all axes).
void fft_nd(std::vector<std::complex<double>>& data, int dim, int extent,
            bool inverse = false);

}  // namespace ballistica
