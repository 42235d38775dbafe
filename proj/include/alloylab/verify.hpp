#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alloylab/disorder.hpp"
#include "alloylab/eig.hpp"
#include "alloylab/lattice.hpp"
#include "alloylab/operator.hpp"
#include "alloylab/stats.hpp"

namespace alloy {

struct LemmaCheckResult {
  std::string lemma;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // min over trials of (bound - observed); negative on violation
  double bound = 0.0;
  double observed = 0.0;      // mean (Monte Carlo checks) or the worst observed value
  double half_width = 0.0;    // 3 standard errors where applicable
  std::vector<std::pair<std::string, double>> extras;

  bool passed() const noexcept { return violations == 0; }
  double extra(const std::string& key) const;
};

// Average of <δ_x, 1_I(H0 + t δ_x) δ_x> over t ~ law against 8 S(|I|).
LemmaCheckResult spectral_averaging_check(const HamiltonianMatrix& h0, std::size_t site, const DisorderLaw& law,
                                          const Interval& interval, std::size_t trials, std::uint64_t seed);

// tr 1_(a,b](H0 + s δ_x) <= 1 + tr 1_(a,b](H0 + t δ_x) for 0 <= s <= t.
LemmaCheckResult monotonicity_check(const HamiltonianMatrix& h0, std::size_t site, double s, double t,
                                    const Interval& interval);

// For unit φ with ||(H - E)φ|| = r: some eigenvalue lies within r of E, and
// within 2ε when r <= ε. Also records where that eigenvector is centred
// relative to the support of φ.
LemmaCheckResult approx_eigvector_check(const HamiltonianMatrix& h, std::span<const double> phi, double energy,
                                        double epsilon);

// Bernoulli sandwich on every cube of the decomposition: X computed for the
// truncated operator (margin 4ℓ'/3, interval shrunk by `shift`), the full
// operator (margin ℓ'), and the truncated operator again (margin 2ℓ'/3,
// interval widened by `shift`).
struct SandwichCounts {
  std::size_t lower_ones = 0, middle_ones = 0, upper_ones = 0;
};
LemmaCheckResult truncation_sandwich_check(const DisorderRealization& omega, const SingleSitePotential& u,
                                           double coupling, const BoxDecomposition& decomp, int truncation_radius,
                                           const Interval& interval, double shift, SandwichCounts* counts = nullptr);

// Per-cube ||H_trunc - H_full|| = λ max |ω̃ - ω̃^{(ℓ'')}| against ε L^{-d};
// violations count breaches of the deterministic bound λ ||ω||_∞ Σ_{|m|>ℓ''} |u(m)|.
LemmaCheckResult perturbation_norm_check(const DisorderRealization& omega, const SingleSitePotential& u,
                                         double coupling, const BoxDecomposition& decomp, int truncation_radius,
                                         double epsilon, double disorder_bound);

// Torus max-norm distance between two cubes of `parent`.
int cube_distance(const PeriodicBox& parent, const PeriodicBox& a, const PeriodicBox& b);

// Covariance of paired indicators with a 3σ null band. The cubes must be
// more than 2ℓ'' apart so that truncated potentials share no couplings.
LemmaCheckResult independence_check(const std::vector<std::pair<int, int>>& samples, const PeriodicBox& parent,
                                    const PeriodicBox& cube_a, const PeriodicBox& cube_b, int truncation_radius);

}  // namespace alloy
