#include "alloylab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alloylab/error.hpp"

namespace alloy {

double LemmaCheckResult::extra(const std::string& key) const {
  for (const auto& [k, v] : extras)
    if (k == key) return v;
  fail(ErrorCode::index, "no extra named '" + key + "' in " + lemma + " result");
}

LemmaCheckResult spectral_averaging_check(const HamiltonianMatrix& h0, std::size_t site, const DisorderLaw& law,
                                          const Interval& interval, std::size_t trials, std::uint64_t seed) {
  if (trials < 1000) fail(ErrorCode::domain, "spectral averaging needs at least 1000 samples");
  if (site >= h0.n) fail(ErrorCode::index, "site index outside the matrix");
  if (!(interval.hi > interval.lo)) fail(ErrorCode::domain, "empty interval");

  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double shift = law.sample(rng);
    const Spectrum s = eigh(rank_one_shift(h0, site, shift));
    const double p = projector_diagonal(s, site, interval.lo, interval.hi);
    sum += p;
    sum2 += p * p;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));

  LemmaCheckResult r;
  r.lemma = "spectral_averaging";
  r.trials = trials;
  r.bound = 8.0 * law.concentration(interval.length());
  r.observed = mean;
  r.half_width = 3.0 * std::sqrt(var / n);
  r.worst_margin = r.bound - mean;
  r.violations = mean > r.bound + r.half_width ? 1 : 0;
  r.extras = {{"concentration", law.concentration(interval.length())}, {"variance", var}};
  return r;
}

LemmaCheckResult monotonicity_check(const HamiltonianMatrix& h0, std::size_t site, double s, double t,
                                    const Interval& interval) {
  if (!(s >= 0.0 && t >= s)) fail(ErrorCode::domain, "monotonicity needs 0 <= s <= t");
  if (site >= h0.n) fail(ErrorCode::index, "site index outside the matrix");
  if (interval.lo > interval.hi) fail(ErrorCode::domain, "reversed interval");

  const auto count = [&](double shift) {
    return count_in(eigvalsh(rank_one_shift(h0, site, shift)), interval.lo, interval.hi);
  };
  const auto cs = static_cast<double>(count(s));
  const auto ct = static_cast<double>(count(t));

  LemmaCheckResult r;
  r.lemma = "monotonicity";
  r.trials = 1;
  r.bound = 1.0 + ct;
  r.observed = cs;
  r.worst_margin = r.bound - cs;
  r.violations = cs > r.bound ? 1 : 0;
  r.extras = {{"count_s", cs}, {"count_t", ct}};
  return r;
}

LemmaCheckResult approx_eigvector_check(const HamiltonianMatrix& h, std::span<const double> phi, double energy,
                                        double epsilon) {
  if (phi.size() != h.n) fail(ErrorCode::sizing, "vector length does not match the matrix");
  double norm2 = 0.0;
  for (double x : phi) norm2 += x * x;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-10) fail(ErrorCode::domain, "trial vector is not normalised");

  const std::size_t n = h.n;
  double res2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double y = -energy * phi[i];
    for (std::size_t j = 0; j < n; ++j) y += h(i, j) * phi[j];
    res2 += y * y;
  }
  const double residual = std::sqrt(res2);

  const Spectrum spec = eigh(h);
  std::size_t nearest = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spec.values.size(); ++j) {
    const double g = std::abs(spec.values[j] - energy);
    if (g < gap) {
      gap = g;
      nearest = j;
    }
  }

  // Rounding slack for the dense solver.
  const double slack = 1e-12 * std::max(1.0, spec.norm_bound);
  LemmaCheckResult r;
  r.lemma = "approximate_eigenvector";
  r.trials = 1;
  r.bound = residual;
  r.observed = gap;
  r.worst_margin = residual - gap;
  std::size_t bad = gap > residual + slack ? 1 : 0;
  const bool within_epsilon = residual <= epsilon;
  if (within_epsilon && gap > 2.0 * epsilon + slack) ++bad;
  r.violations = bad;

  // Where the matched eigenvector lives relative to supp φ.
  double max_abs = 0.0;
  for (double x : phi) max_abs = std::max(max_abs, std::abs(x));
  const std::size_t center = localization_center(spec.vector(nearest));
  int distance = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(phi[i]) > 1e-14 * max_abs) distance = std::min(distance, h.box.torus_distance_index(center, i));

  r.extras = {{"residual", residual},
              {"nearest_eigenvalue", spec.values[nearest]},
              {"nearest_index", static_cast<double>(nearest)},
              {"within_epsilon", within_epsilon ? 1.0 : 0.0},
              {"center_to_support", static_cast<double>(distance)}};
  return r;
}

LemmaCheckResult truncation_sandwich_check(const DisorderRealization& omega, const SingleSitePotential& u,
                                           double coupling, const BoxDecomposition& decomp, int truncation_radius,
                                           const Interval& interval, double shift, SandwichCounts* counts) {
  if (truncation_radius < 0) fail(ErrorCode::domain, "negative truncation radius");
  if (3 * truncation_radius > decomp.cube_side)
    fail(ErrorCode::domain, "truncation radius exceeds a third of the cube side");
  if (shift < 0.0) fail(ErrorCode::domain, "negative interval shift");

  const CorrelatedPotential full = correlate(omega, u, decomp.parent);
  const CorrelatedPotential cut = correlate(omega, truncate(u, truncation_radius), decomp.parent);
  const double gap = decomp.gap;
  const Interval inner{interval.lo + shift, interval.hi - shift};
  const Interval outer{interval.lo - shift, interval.hi + shift};

  SandwichCounts tally;
  std::size_t bad = 0;
  for (std::size_t j = 0; j < decomp.count(); ++j) {
    const PeriodicBox cube = decomp.cube(j);
    const Spectrum sf = eigh(restrict(full, coupling, cube));
    const Spectrum st = eigh(restrict(cut, coupling, cube));
    // A shrunken interval that became empty carries no eigenvalue.
    // A deeper margin is the stricter condition, so the lower variable gets
    // 4ℓ'/3 and the upper one 2ℓ'/3.
    const int lower = inner.hi > inner.lo ? bernoulli_x(st, inner, 4.0 * gap / 3.0) : 0;
    const int middle = bernoulli_x(sf, interval, gap);
    const int upper = bernoulli_x(st, outer, 2.0 * gap / 3.0);
    tally.lower_ones += static_cast<std::size_t>(lower);
    tally.middle_ones += static_cast<std::size_t>(middle);
    tally.upper_ones += static_cast<std::size_t>(upper);
    if (lower > middle || middle > upper) ++bad;
  }
  if (counts) *counts = tally;

  LemmaCheckResult r;
  r.lemma = "truncation_sandwich";
  r.trials = decomp.count();
  r.violations = bad;
  r.bound = 1.0;
  r.observed = r.trials ? 1.0 - static_cast<double>(bad) / static_cast<double>(r.trials) : 1.0;
  r.worst_margin = bad ? -1.0 : 0.0;
  r.extras = {{"lower_ones", static_cast<double>(tally.lower_ones)},
              {"middle_ones", static_cast<double>(tally.middle_ones)},
              {"upper_ones", static_cast<double>(tally.upper_ones)}};
  return r;
}

LemmaCheckResult perturbation_norm_check(const DisorderRealization& omega, const SingleSitePotential& u,
                                         double coupling, const BoxDecomposition& decomp, int truncation_radius,
                                         double epsilon, double disorder_bound) {
  if (truncation_radius < 0) fail(ErrorCode::domain, "negative truncation radius");
  if (!(epsilon > 0.0)) fail(ErrorCode::domain, "epsilon must be positive");

  const CorrelatedPotential full = correlate(omega, u, decomp.parent);
  const CorrelatedPotential cut = correlate(omega, truncate(u, truncation_radius), decomp.parent);

  const int d = decomp.parent.dimension();
  const int half = std::max(1, decomp.parent.half_side());
  const double threshold = epsilon * std::pow(static_cast<double>(half), -d);
  // Deterministic bound uses the stored tail: that is what the two operators differ by.
  const double deterministic = coupling * disorder_bound * u.stored_tail_sum(truncation_radius + 1, 1);
  const TailReport tail = tail_bounds(u, truncation_radius + 1, epsilon / coupling, half, disorder_bound);

  std::size_t exceed = 0, bad = 0;
  double worst = 0.0, worst_margin = std::numeric_limits<double>::infinity();
  std::size_t cube_volume = 0;
  for (std::size_t j = 0; j < decomp.count(); ++j) {
    const PeriodicBox cube = decomp.cube(j);
    cube_volume = cube.volume();
    double diff = 0.0;
    for (std::size_t i = 0; i < cube.volume(); ++i) {
      const std::size_t p = decomp.parent.index(cube.site(i));
      diff = std::max(diff, std::abs(full.values[p] - cut.values[p]));
    }
    diff *= coupling;
    worst = std::max(worst, diff);
    if (diff > threshold) ++exceed;
    const double slack = 1e-12 * std::max(1.0, deterministic);
    if (diff > deterministic + slack) ++bad;
    worst_margin = std::min(worst_margin, deterministic - diff);
  }

  LemmaCheckResult r;
  r.lemma = "perturbation_norm";
  r.trials = decomp.count();
  r.violations = bad;
  r.bound = deterministic;
  r.observed = worst;
  r.worst_margin = r.trials ? worst_margin : 0.0;
  const double budget = std::min(1.0, static_cast<double>(cube_volume) * tail.hoeffding_bound);
  r.extras = {{"threshold", threshold},
              {"exceedances", static_cast<double>(exceed)},
              {"exceedance_frequency", r.trials ? static_cast<double>(exceed) / static_cast<double>(r.trials) : 0.0},
              {"hoeffding_cube_budget", budget},
              {"l2_tail", tail.l2_tail}};
  return r;
}

int cube_distance(const PeriodicBox& parent, const PeriodicBox& a, const PeriodicBox& b) {
  if (!parent.contains(a) || !parent.contains(b)) fail(ErrorCode::geometry, "cube outside the parent box");
  const int n = parent.side();
  int dist = 0;
  for (int k = 0; k < parent.dimension(); ++k) {
    int best = n;
    for (int x = 0; x < a.side() && best > 0; ++x)
      for (int y = 0; y < b.side(); ++y) {
        const int delta = std::abs((a.origin()[k] + x) - (b.origin()[k] + y));
        best = std::min(best, std::min(delta, n - delta));
      }
    dist = std::max(dist, best);
  }
  return dist;
}

LemmaCheckResult independence_check(const std::vector<std::pair<int, int>>& samples, const PeriodicBox& parent,
                                    const PeriodicBox& cube_a, const PeriodicBox& cube_b, int truncation_radius) {
  const int separation = cube_distance(parent, cube_a, cube_b);
  if (separation <= 2 * truncation_radius)
    fail(ErrorCode::geometry, "cubes are " + std::to_string(separation) + " apart, need more than " +
                                  std::to_string(2 * truncation_radius));
  if (samples.size() < 2) fail(ErrorCode::domain, "independence check needs at least two samples");

  const double n = static_cast<double>(samples.size());
  double m1 = 0.0, m2 = 0.0;
  for (const auto& [x, y] : samples) {
    m1 += x;
    m2 += y;
  }
  m1 /= n;
  m2 /= n;
  double zsum = 0.0, z2sum = 0.0;
  for (const auto& [x, y] : samples) {
    const double z = (x - m1) * (y - m2);
    zsum += z;
    z2sum += z * z;
  }
  const double zmean = zsum / n;
  const double cov = zsum / (n - 1.0);
  const double zvar = std::max(0.0, (z2sum - n * zmean * zmean) / (n - 1.0));

  LemmaCheckResult r;
  r.lemma = "independence";
  r.trials = samples.size();
  r.observed = cov;
  r.half_width = 3.0 * std::sqrt(zvar / n);
  r.bound = 0.0;
  r.worst_margin = r.half_width - std::abs(cov);
  r.violations = std::abs(cov) > r.half_width ? 1 : 0;
  r.extras = {{"separation", static_cast<double>(separation)}, {"mean_a", m1}, {"mean_b", m2}};
  return r;
}

}  // namespace alloy
