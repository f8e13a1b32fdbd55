#include "ballistica/fft.hpp"

#include <cmath>

#include "ballistica/error.hpp"

namespace ballistica {

namespace {
bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n))
    throw Error(ErrorCode::InvalidArgument, "fft length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, rev = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; rev & bit; bit >>= 1) rev ^= bit;
    rev ^= bit;
    if (i < rev) std::swap(a[i], a[rev]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double angle = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

void fft_axis(std::vector<std::complex<double>>& data, int dim, int extent, int axis,
              bool inverse) {
  std::size_t total = data.size();
  std::size_t stride = 1;
  for (int j = dim - 1; j > axis; --j) stride *= extent;
  std::size_t block = stride * extent;
  std::vector<std::complex<double>> line(extent);
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (int i = 0; i < extent; ++i) line[i] = data[base + off + i * stride];
      fft(line, inverse);
      for (int i = 0; i < extent; ++i) data[base + off + i * stride] = line[i];
    }
  }
}

void fft_nd(std::vector<std::complex<double>>& data, int dim, int extent, bool inverse) {
  for (int axis = 0; axis < dim; ++axis) fft_axis(data, dim, extent, axis, inverse);
}

}  // namespace ballistica
