#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alloylab/disorder.hpp"
#include "alloylab/eig.hpp"
#include "alloylab/lattice.hpp"

namespace alloy {

// Half-open interval (lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x > lo && x <= hi; }
};

struct IdsCurve {
  std::vector<double> energies;
  std::vector<double> values;      // N(E), states per site
  std::vector<double> std_errors;  // across trials
  std::size_t samples = 0;
  std::size_t volume = 0;

  // Piecewise-linear interpolation; E must lie inside the grid.
  double at(double e) const;
};

IdsCurve estimate_ids(const std::vector<Spectrum>& spectra, const std::vector<double>& grid);
// Same estimator from per-trial counts #{E_j <= grid[g]} (counts[trial][g]).
IdsCurve ids_from_counts(const std::vector<std::vector<std::size_t>>& counts, const std::vector<double>& grid,
                         std::size_t volume);

struct DosEstimate {
  double e0 = 0.0;
  double bandwidth = 0.0;
  double lower_value = 0.0;  // N(E0 - h)
  double upper_value = 0.0;  // N(E0 + h)
  double value = 0.0;        // n(E0)
  bool positive = false;
};

DosEstimate dos_at(const IdsCurve& ids, double e0, double h);

struct UnfoldedPointProcess {
  double e0 = 0.0;
  double n0 = 0.0;
  std::size_t volume = 0;
  std::vector<double> points;  // ξ_j
  std::vector<double> energies;
  std::vector<Site> centers;   // parallel to points when available
  std::size_t trial = 0;

  double energy_of(double xi) const { return e0 + xi / (static_cast<double>(volume) * n0); }
};

UnfoldedPointProcess unfold(const Spectrum& spec, double e0, double n0, double window);

double poisson_reference(std::span<const double> lengths, std::span<const int> counts);

struct CountingEstimate {
  std::vector<Interval> intervals;
  std::vector<int> counts;
  std::size_t trials = 0;
  std::size_t hits = 0;
  double frequency = 0.0;
  double half_width = 0.0;  // 3 binomial standard errors
  double reference = 0.0;   // Poisson product
};

CountingEstimate counting_statistics(const std::vector<UnfoldedPointProcess>& processes,
                                     const std::vector<Interval>& intervals, const std::vector<int>& counts);

// Number of points of each process inside one interval.
std::vector<std::size_t> interval_counts(const std::vector<UnfoldedPointProcess>& processes, const Interval& i);

struct FactorialMomentReport {
  int order = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double half_width = 0.0;  // 3 standard errors
};

FactorialMomentReport factorial_moment(std::span<const std::size_t> counts, int k);
// E[N_1 (N_2 - 1) ... (N_k - (k-1))] from per-trial counts over nested intervals.
FactorialMomentReport factorial_moment_nested(const std::vector<std::vector<std::size_t>>& counts);

struct WegnerMinamiRow {
  int half_side = 0;
  std::size_t volume = 0;
  Interval interval;
  int order = 0;
  FactorialMomentReport moment;
  double concentration = 0.0;  // S(|I|)
  double ratio = 0.0;          // moment / (S(|I|) |Λ|)^k
  double ratio_half_width = 0.0;
};

// counts[trial] = number of eigenvalues in `interval`.
std::vector<WegnerMinamiRow> wegner_minami_rows(std::span<const std::size_t> counts, const Interval& interval,
                                                int half_side, std::size_t volume, int k_max,
                                                const DisorderLaw& law);

struct LocalizationReport {
  std::size_t index = 0;
  double energy = 0.0;
  Site center;
  std::size_t center_index = 0;
  bool fit_valid = false;
  double eta = 0.0;             // fitted decay rate η̂
  double log_prefactor = 0.0;   // q̂
  std::size_t fit_points = 0;
  std::vector<double> mass_outside;  // mass_outside[r] = Σ_{dist > r} |φ|^2
  int near_max_diameter = 0;    // torus diameter of sites with |φ| >= max|φ|/2
};

std::size_t localization_center(std::span<const double> phi);
LocalizationReport localize_vector(const PeriodicBox& box, std::span<const double> phi, double amplitude_floor = 1e-14);
std::vector<LocalizationReport> localization_report(const Spectrum& spec, double amplitude_floor = 1e-14);

struct MatchedPair {
  std::size_t global_index = 0;
  double global_energy = 0.0;
  std::size_t cube = 0;
  double local_energy = 0.0;
  double gap = 0.0;
};

struct MatchReport {
  bool z_ok = false;
  bool condition_i = false;
  bool condition_ii = false;
  bool condition_iii = false;
  double threshold = 0.0;  // e^{-η ℓ'/2}
  std::vector<std::size_t> cube_counts;
  std::vector<MatchedPair> pairs;
  std::vector<int> center_depths;  // per global eigenvalue in I: best distance to a cube complement (-1: no cube)
  std::vector<std::string> violations;
};

MatchReport match_local_global(const Spectrum& global, const std::vector<Spectrum>& locals,
                               const BoxDecomposition& decomp, const Interval& window, double eta);

int bernoulli_x(const Spectrum& local, const Interval& interval, double margin);

struct JointProcessReport {
  std::vector<std::pair<double, std::vector<double>>> points;  // (ξ, x/(2L+1))
  int cells_per_axis = 0;
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::vector<double> rank_correlations;  // Spearman ρ of ξ against each coordinate
  double correlation_bound = 0.0;         // 3 / sqrt(n)
};

JointProcessReport joint_process(const std::vector<UnfoldedPointProcess>& processes, int half_side,
                                 int cells_per_axis);

double spearman(std::span<const double> x, std::span<const double> y);
double chi_square_p_value(double chi_square, int dof);

}  // namespace alloy
