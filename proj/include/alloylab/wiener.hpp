#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "alloylab/disorder.hpp"
#include "alloylab/lattice.hpp"

namespace alloy {

// Multiplier M(θ) = Σ u_n e^{i n·θ} sampled on an N^d grid, the Fourier
// coefficients v_n of 1/M (so that u ⋆ v = δ_0), the shift k and κ.
struct WienerData {
  int dimension = 0;
  std::size_t grid = 0;                            // N per axis (final, after doubling)
  std::vector<std::complex<double>> multiplier;    // M(2π j/N), axis 0 fastest
  std::vector<double> inverse;                     // v_n at torus position n mod N
  double min_abs_multiplier = 0.0;
  double max_abs_multiplier = 0.0;
  Site k;
  double a = 0.0;        // M̂_k = u(k)
  double a_tilde = 0.0;  // M̂⁻¹_{-k} = v_{-k}
  double kappa = 0.0;
  double kappa_remainder = 0.0;
  double pairing_sum = 0.0;     // Σ_n u_n v_{-n}
  double identity_error = 0.0;  // max_m |(u ⋆ v)(m) - δ_0(m)| on the index torus
  double inverse_change = 0.0;  // last doubling step difference of the coefficients
  bool converged = false;
  std::vector<std::size_t> grid_history;

  // v_n for any n in Z^d (read periodically from the index torus).
  double inverse_at(const Site& n) const;
};

// `grid` must be a power of two >= 128; it is doubled until successive
// coefficient sets agree to 1e-12 or a size cap is reached.
WienerData build_wiener(const SingleSitePotential& u, std::size_t grid = 128);

struct KappaResult {
  double kappa = 0.0;
  double partial_sum = 0.0;  // Σ_{m≠0} M̂_{k+m} M̂⁻¹_{-k-m} over stored offsets
  double remainder = 0.0;    // bound on the terms beyond the stored radius
};

KappaResult kappa_from_lemma(const SingleSitePotential& u, const WienerData& data);

// (C_s⁻¹)_{n0,m0} for the circulant convolution by u on the torus (Z/sZ)^d,
// computed by conjugate gradients on the normal equations in real space.
double conditional_slope(const SingleSitePotential& u, int torus_size, const Site& m0, const Site& n0);

// Empirical check of the conditional law of ω̃_{m0} given the other ω̃ values
// on the finite torus, with i.i.d. couplings drawn from `law`.
struct TransportCheck {
  double slope = 0.0;
  double predicted_width = 0.0;  // (law width) / |slope|
  double observed_min = 0.0;
  double observed_max = 0.0;
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 0.0;
  std::size_t samples = 0;
  double max_identity_error = 0.0;  // worst |ω_{n0} - (slope ω̃_{m0} + R)|
};

TransportCheck concentration_transport_check(const SingleSitePotential& u, int torus_size, const Site& m0,
                                             const Site& n0, const DisorderLaw& law, std::size_t samples,
                                             int bins, std::uint64_t seed);

// JSON report: multiplier extrema, k, κ and the decay profile of the inverse
// coefficients (max |v_n| per max-norm shell).
std::string wiener_report_json(const SingleSitePotential& u, const WienerData& data);

}  // namespace alloy
