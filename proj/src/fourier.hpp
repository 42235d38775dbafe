#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace alloy::detail {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n);

// Unnormalised radix-2 transform: forward uses e^{-2πi jn/N}, inverse e^{+2πi jn/N}.
void fft(std::vector<cplx>& a, bool inverse);

// Same transform along every axis of an N^d array stored with axis 0 fastest.
void fft_nd(std::vector<cplx>& a, int dimension, std::size_t n, bool inverse);

}  // namespace alloy::detail
