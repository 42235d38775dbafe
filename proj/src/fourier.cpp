#include "fourier.hpp"

#include <cmath>
#include <numbers>

#include "alloylab/error.hpp"

namespace alloy::detail {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) fail(ErrorCode::domain, "transform length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles from the exact angle rather than by repeated multiplication.
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const cplx w(std::cos(ang), std::sin(ang));
      for (std::size_t i = k; i < n; i += len) {
        const cplx u = a[i];
        const cplx v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

void fft_nd(std::vector<cplx>& a, int dimension, std::size_t n, bool inverse) {
  std::size_t stride = 1;
  std::vector<cplx> line(n);
  for (int axis = 0; axis < dimension; ++axis) {
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < a.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (std::size_t i = 0; i < n; ++i) line[i] = a[base + off + i * stride];
        fft(line, inverse);
        for (std::size_t i = 0; i < n; ++i) a[base + off + i * stride] = line[i];
      }
    }
    stride *= n;
  }
}

}  // namespace alloy::detail
