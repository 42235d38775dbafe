#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "alloylab/lattice.hpp"
#include "alloylab/rng.hpp"

namespace alloy {

enum class DecayKind { compact, power, exponential };

struct DecayInfo {
  DecayKind kind = DecayKind::compact;
  double exponent = 0.0;  // α_decay for power decay, the rate for exponential decay
};

// Closed-form profile of a named family, used to sum tails past the stored
// radius.
using Profile = std::function<double(const Site&)>;

// Single-site profile u on Z^d, stored densely on [-R, R]^d. Coefficients
// outside the stored radius are exactly zero in storage; `profile` (when
// present) describes what was cut away.
class SingleSitePotential {
 public:
  SingleSitePotential(int dimension, int radius, std::vector<double> coefficients, DecayInfo decay,
                      Profile profile = {}, std::string name = {});

  int dimension() const noexcept { return support_.dimension(); }
  int radius() const noexcept { return radius_; }
  const PeriodicBox& support() const noexcept { return support_; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }
  const DecayInfo& decay() const noexcept { return decay_; }
  const std::string& name() const noexcept { return name_; }
  bool has_profile() const noexcept { return static_cast<bool>(profile_); }
  double profile_at(const Site& n) const;

  // Stored coefficient, zero outside the stored radius.
  double at(const Site& n) const;

  double l1_norm() const;

  // Σ_{|m|∞ >= from} |u(m)|^p over the ideal (untruncated) profile: stored
  // coefficients plus the part beyond the stored radius, taken from the
  // profile or, failing that, from the decay metadata.
  double tail_sum(int from, int p) const;
  // Same sum restricted to stored coefficients.
  double stored_tail_sum(int from, int p) const;

  // c = max over stored n != 0 of |u(n)| |n|^α_decay (power decay only).
  double decay_constant() const;

  bool is_zero() const;

 private:
  double beyond_storage_sum(int p) const;

  PeriodicBox support_;
  int radius_ = 0;
  std::vector<double> coeffs_;
  DecayInfo decay_;
  Profile profile_;
  std::string name_;
};

// Named families. A negative radius selects the storage rule: the smallest R
// whose l1 tail is below 1e-10 of the l1 norm, capped per dimension.
SingleSitePotential delta_potential(int dimension);
SingleSitePotential geometric_potential(int dimension, double ratio, int radius = -1);
SingleSitePotential power_potential(int dimension, double exponent, int radius = -1);
SingleSitePotential nearest_neighbour_potential(int dimension, double centre, double neighbour);

int storage_radius_cap(int dimension);

SingleSitePotential truncate(const SingleSitePotential& u, int radius);

std::complex<double> multiplier(const SingleSitePotential& u, std::span<const double> theta);

struct DecayFit {
  bool valid = false;
  double exponent = 0.0;       // fitted α from log|u| = log c - α log|n|
  double log_prefactor = 0.0;
  std::size_t points = 0;
};

DecayFit fit_decay(const SingleSitePotential& u);

struct AssumptionReport {
  double l1_norm = 0.0;
  double min_multiplier = 0.0;
  std::vector<double> argmin;
  double max_multiplier = 0.0;
  double tolerance = 1e-6;
  bool passes_s = false;
  bool passes_h = false;
  bool passes_d = false;
  DecayFit fit;
  double storage_tail_l1 = 0.0;  // l1 mass cut away by the stored radius
};

AssumptionReport check_assumptions(const SingleSitePotential& u, int grid_points, double tolerance = 1e-6);

// Common law of the i.i.d. couplings: a piecewise-constant bounded density
// (the uniform law is the one-bin case).
class DisorderLaw {
 public:
  static DisorderLaw uniform(double lo = -0.5, double hi = 0.5);
  static DisorderLaw piecewise(std::vector<double> edges, std::vector<double> weights);

  double sample(Rng& rng) const;
  // S(s) = sup_a μ([a, a+s]).
  double concentration(double s) const;
  // Smallest C with S(s) <= C s, the maximal density.
  double lipschitz_constant() const;
  double essential_bound() const;
  double lower() const noexcept { return edges_.front(); }
  double upper() const noexcept { return edges_.back(); }
  double mean() const;
  double variance() const;
  double cdf(double x) const;
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  DisorderLaw(std::vector<double> edges, std::vector<double> weights);

  std::vector<double> edges_;
  std::vector<double> weights_;  // probability mass per bin
  std::vector<double> cumulative_;
};

struct DisorderRealization {
  PeriodicBox box;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

// i.i.d. couplings on `box` enlarged by `margin`, drawn from the generator of
// (seed, trial, stream).
DisorderRealization sample_disorder(const PeriodicBox& box, const DisorderLaw& law, std::uint64_t seed,
                                    std::uint64_t trial, int margin = 0, std::uint64_t stream = 0);

struct CorrelatedPotential {
  PeriodicBox box;
  std::vector<double> values;  // ω̃ on box
  std::string profile_name;
  int profile_radius = 0;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  double sup_norm() const;
};

// ω̃_m = Σ_n u(m-n) ω_n for every m of target, as an exact finite sum over
// the stored support.
CorrelatedPotential correlate(const DisorderRealization& omega, const SingleSitePotential& u,
                              const PeriodicBox& target);

struct TailReport {
  int from = 0;
  double l2_tail = 0.0;          // T = Σ_{|m|>=from} |u(m)|^2
  double l1_tail = 0.0;
  double epsilon = 0.0;
  double threshold = 0.0;        // ε L^{-d}
  double linear_constant = 0.0;   // C in exp(-ε L^{-d} / (C T)); taken as 2 c^2
  double linear_bound = 0.0;
  double hoeffding_bound = 0.0;  // 2 exp(-ε^2 L^{-2d} / (2 c^2 T)), capped at 1
};

TailReport tail_bounds(const SingleSitePotential& u, int from, double epsilon, int half_side,
                       double disorder_bound = 0.5);

// δ = -d + (2 α_decay - d + 1) β'.
double decorrelation_exponent(int dimension, double decay_exponent, double beta_prime);

// Structured text (JSON) form of a potential: dimension, decay metadata and
// the list of (offset, coefficient) pairs.
SingleSitePotential parse_potential(const std::string& text);
SingleSitePotential load_potential(const std::string& path);
std::string potential_to_json(const SingleSitePotential& u);

}  // namespace alloy
