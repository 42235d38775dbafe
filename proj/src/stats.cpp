#include "alloylab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "alloylab/error.hpp"

namespace alloy {

namespace {

// #{j : E_j <= e} for a (possibly windowed) spectrum.
std::size_t count_at_most(const Spectrum& s, double e) {
  if (e < -s.norm_bound && s.norm_bound > 0.0) return 0;
  if (e >= s.norm_bound && s.norm_bound > 0.0) return s.dim;
  if (e < s.window_lo || e > s.window_hi) fail(ErrorCode::domain, "energy outside the computed spectral window");
  return s.below_window +
         static_cast<std::size_t>(std::upper_bound(s.values.begin(), s.values.end(), e) - s.values.begin());
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace

double IdsCurve::at(double e) const {
  if (energies.empty()) fail(ErrorCode::domain, "empty IDS curve");
  if (e < energies.front() || e > energies.back()) fail(ErrorCode::domain, "energy outside the IDS grid");
  const auto it = std::upper_bound(energies.begin(), energies.end(), e);
  if (it == energies.end()) return values.back();
  const auto i = static_cast<std::size_t>(it - energies.begin());
  if (i == 0) return values.front();
  const double t = (e - energies[i - 1]) / (energies[i] - energies[i - 1]);
  return values[i - 1] + t * (values[i] - values[i - 1]);
}

IdsCurve ids_from_counts(const std::vector<std::vector<std::size_t>>& counts, const std::vector<double>& grid,
                         std::size_t volume) {
  if (counts.empty()) fail(ErrorCode::domain, "no spectra supplied to the IDS estimator");
  if (volume == 0) fail(ErrorCode::domain, "zero volume");
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (!(grid[g] > grid[g - 1])) fail(ErrorCode::domain, "IDS grid must be strictly increasing");
  IdsCurve c;
  c.energies = grid;
  c.samples = counts.size();
  c.volume = volume;
  c.values.assign(grid.size(), 0.0);
  c.std_errors.assign(grid.size(), 0.0);
  const double n = static_cast<double>(counts.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0, s2 = 0.0;
    for (const auto& row : counts) {
      if (row.size() != grid.size()) fail(ErrorCode::domain, "count row does not match the grid");
      const double x = static_cast<double>(row[g]) / static_cast<double>(volume);
      s += x;
      s2 += x * x;
    }
    c.values[g] = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 - s * s / n) / (n - 1)) : 0.0;
    c.std_errors[g] = std::sqrt(var / n);
  }
  return c;
}

IdsCurve estimate_ids(const std::vector<Spectrum>& spectra, const std::vector<double>& grid) {
  if (spectra.empty()) fail(ErrorCode::domain, "no spectra supplied to the IDS estimator");
  const std::size_t dim = spectra.front().dim;
  std::vector<std::vector<std::size_t>> counts;
  counts.reserve(spectra.size());
  for (const auto& s : spectra) {
    if (s.dim != dim) fail(ErrorCode::domain, "spectra come from different box sizes");
    std::vector<std::size_t> row(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) row[g] = count_at_most(s, grid[g]);
    counts.push_back(std::move(row));
  }
  return ids_from_counts(counts, grid, dim);
}

DosEstimate dos_at(const IdsCurve& ids, double e0, double h) {
  if (!(h > 0.0)) fail(ErrorCode::domain, "bandwidth must be positive");
  DosEstimate d;
  d.e0 = e0;
  d.bandwidth = h;
  d.lower_value = ids.at(e0 - h);
  d.upper_value = ids.at(e0 + h);
  d.value = (d.upper_value - d.lower_value) / (2.0 * h);
  d.positive = d.value > 0.0;
  return d;
}

UnfoldedPointProcess unfold(const Spectrum& spec, double e0, double n0, double window) {
  if (!(n0 > 0.0)) fail(ErrorCode::domain, "density of states must be positive to unfold");
  UnfoldedPointProcess p;
  p.e0 = e0;
  p.n0 = n0;
  p.volume = spec.dim;
  const double scale = static_cast<double>(spec.dim) * n0;
  const double half = window / scale;
  if (e0 - half < spec.window_lo || e0 + half > spec.window_hi)
    fail(ErrorCode::domain, "unfolding window exceeds the computed spectral window");
  for (std::size_t j = 0; j < spec.values.size(); ++j) {
    const double xi = scale * (spec.values[j] - e0);
    if (std::abs(xi) > window) continue;
    p.points.push_back(xi);
    p.energies.push_back(spec.values[j]);
    if (spec.has_vectors()) p.centers.push_back(spec.box.site(localization_center(spec.vector(j))));
  }
  return p;
}

double poisson_reference(std::span<const double> lengths, std::span<const int> counts) {
  if (lengths.size() != counts.size()) fail(ErrorCode::domain, "lengths and counts differ in size");
  double p = 1.0;
  for (std::size_t l = 0; l < lengths.size(); ++l) {
    const int k = counts[l];
    if (k < 0) return 0.0;
    if (k == 0)
      p *= std::exp(-lengths[l]);
    else
      p *= std::exp(k * std::log(lengths[l]) - lengths[l] - std::lgamma(k + 1.0));
  }
  return p;
}

std::vector<std::size_t> interval_counts(const std::vector<UnfoldedPointProcess>& processes, const Interval& i) {
  std::vector<std::size_t> out;
  out.reserve(processes.size());
  for (const auto& p : processes)
    out.push_back(static_cast<std::size_t>(
        std::count_if(p.points.begin(), p.points.end(), [&](double x) { return i.contains(x); })));
  return out;
}

CountingEstimate counting_statistics(const std::vector<UnfoldedPointProcess>& processes,
                                     const std::vector<Interval>& intervals, const std::vector<int>& counts) {
  if (intervals.size() != counts.size()) fail(ErrorCode::domain, "one count per interval required");
  if (processes.empty()) fail(ErrorCode::domain, "no processes supplied");
  std::vector<Interval> sorted = intervals;
  for (const auto& i : sorted)
    if (!(i.hi > i.lo) || !std::isfinite(i.lo) || !std::isfinite(i.hi))
      fail(ErrorCode::domain, "intervals must be bounded and non-empty");
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t l = 1; l < sorted.size(); ++l)
    if (sorted[l].lo < sorted[l - 1].hi) fail(ErrorCode::domain, "intervals overlap");

  CountingEstimate c;
  c.intervals = intervals;
  c.counts = counts;
  c.trials = processes.size();
  std::vector<std::vector<std::size_t>> per(intervals.size());
  for (std::size_t l = 0; l < intervals.size(); ++l) per[l] = interval_counts(processes, intervals[l]);
  for (std::size_t t = 0; t < processes.size(); ++t) {
    bool hit = true;
    for (std::size_t l = 0; l < intervals.size(); ++l)
      hit = hit && per[l][t] == static_cast<std::size_t>(counts[l]);
    c.hits += hit;
  }
  const double n = static_cast<double>(c.trials);
  c.frequency = static_cast<double>(c.hits) / n;
  c.half_width = 3.0 * std::sqrt(c.frequency * (1.0 - c.frequency) / n);
  std::vector<double> lengths;
  for (const auto& i : intervals) lengths.push_back(i.length());
  c.reference = poisson_reference(lengths, counts);
  return c;
}

namespace {

FactorialMomentReport summarise(const std::vector<double>& x, int order) {
  FactorialMomentReport r;
  r.order = order;
  r.trials = x.size();
  if (x.empty()) return r;
  r.mean = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  const double n = static_cast<double>(x.size());
  r.variance = x.size() > 1 ? ss / (n - 1) : 0.0;
  r.std_error = std::sqrt(r.variance / n);
  r.half_width = 3.0 * r.std_error;
  return r;
}

}  // namespace

FactorialMomentReport factorial_moment(std::span<const std::size_t> counts, int k) {
  if (k < 1) fail(ErrorCode::domain, "factorial moment order must be at least 1");
  std::vector<double> x;
  x.reserve(counts.size());
  for (std::size_t c : counts) {
    double f = 1.0;
    for (int i = 0; i < k; ++i) f *= static_cast<double>(c) - i;
    x.push_back(f);
  }
  return summarise(x, k);
}

FactorialMomentReport factorial_moment_nested(const std::vector<std::vector<std::size_t>>& counts) {
  if (counts.empty()) return {};
  const std::size_t k = counts.front().size();
  if (k < 1) fail(ErrorCode::domain, "factorial moment order must be at least 1");
  std::vector<double> x;
  for (const auto& row : counts) {
    if (row.size() != k) fail(ErrorCode::domain, "ragged nested counts");
    for (std::size_t i = 1; i < k; ++i)
      if (row[i] < row[i - 1]) fail(ErrorCode::domain, "counts are not those of nested intervals");
    double f = 1.0;
    for (std::size_t i = 0; i < k; ++i) f *= static_cast<double>(row[i]) - static_cast<double>(i);
    x.push_back(f);
  }
  return summarise(x, static_cast<int>(k));
}

std::vector<WegnerMinamiRow> wegner_minami_rows(std::span<const std::size_t> counts, const Interval& interval,
                                                int half_side, std::size_t volume, int k_max,
                                                const DisorderLaw& law) {
  if (k_max < 1) fail(ErrorCode::domain, "k_max must be at least 1");
  std::vector<WegnerMinamiRow> rows;
  const double s = law.concentration(interval.length());
  for (int k = 1; k <= k_max; ++k) {
    WegnerMinamiRow r;
    r.half_side = half_side;
    r.volume = volume;
    r.interval = interval;
    r.order = k;
    r.moment = factorial_moment(counts, k);
    r.concentration = s;
    const double denom = std::pow(s * static_cast<double>(volume), k);
    r.ratio = denom > 0 ? r.moment.mean / denom : 0.0;
    r.ratio_half_width = denom > 0 ? r.moment.half_width / denom : 0.0;
    rows.push_back(r);
  }
  return rows;
}

std::size_t localization_center(std::span<const double> phi) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < phi.size(); ++i)
    if (std::abs(phi[i]) > std::abs(phi[best])) best = i;
  return best;
}

LocalizationReport localize_vector(const PeriodicBox& box, std::span<const double> phi, double amplitude_floor) {
  if (phi.size() != box.volume()) fail(ErrorCode::domain, "vector length does not match the box");
  LocalizationReport r;
  r.center_index = localization_center(phi);
  r.center = box.site(r.center_index);
  const double peak = std::abs(phi[r.center_index]);
  const int rmax = box.side() / 2;
  r.mass_outside.assign(static_cast<std::size_t>(rmax + 1), 0.0);
  std::vector<double> shell(static_cast<std::size_t>(rmax + 1), 0.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const int dist = box.torus_distance_index(i, r.center_index);
    const double a = std::abs(phi[i]);
    shell[static_cast<std::size_t>(dist)] += a * a;
    if (a >= 0.5 * peak) near.push_back(i);
    if (a > amplitude_floor) {
      const double x = dist, y = std::log(a);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  double acc = 0.0;
  for (int rr = rmax; rr >= 0; --rr) {
    r.mass_outside[static_cast<std::size_t>(rr)] = acc;
    acc += shell[static_cast<std::size_t>(rr)];
  }
  r.fit_points = n;
  const double den = static_cast<double>(n) * sxx - sx * sx;
  if (n >= 2 && den > 0.0) {
    const double slope = (static_cast<double>(n) * sxy - sx * sy) / den;
    r.fit_valid = true;
    r.eta = -slope;
    r.log_prefactor = (sy - slope * sx) / static_cast<double>(n);
  }
  for (std::size_t a = 0; a < near.size(); ++a)
    for (std::size_t b = a + 1; b < near.size(); ++b)
      r.near_max_diameter = std::max(r.near_max_diameter, box.torus_distance_index(near[a], near[b]));
  return r;
}

std::vector<LocalizationReport> localization_report(const Spectrum& spec, double amplitude_floor) {
  if (!spec.has_vectors() && !spec.values.empty()) fail(ErrorCode::domain, "localization needs eigenvectors");
  std::vector<LocalizationReport> out;
  for (std::size_t j = 0; j < spec.values.size(); ++j) {
    auto r = localize_vector(spec.box, spec.vector(j), amplitude_floor);
    r.index = j;
    r.energy = spec.values[j];
    out.push_back(std::move(r));
  }
  return out;
}

MatchReport match_local_global(const Spectrum& global, const std::vector<Spectrum>& locals,
                               const BoxDecomposition& decomp, const Interval& window, double eta) {
  if (!(global.box == decomp.parent)) fail(ErrorCode::provenance, "global spectrum is not on the decomposed box");
  if (locals.size() != decomp.count()) fail(ErrorCode::provenance, "one local spectrum per cube required");
  for (std::size_t j = 0; j < locals.size(); ++j)
    if (!(locals[j].box == decomp.cube(j)))
      fail(ErrorCode::provenance, "local spectrum " + std::to_string(j) + " is not on its cube");
  if (window.lo < global.window_lo || window.hi > global.window_hi)
    fail(ErrorCode::provenance, "global spectrum does not cover the interval");

  MatchReport m;
  m.threshold = std::exp(-eta * decomp.gap / 2.0);

  m.condition_i = true;
  struct Local {
    std::size_t cube;
    double energy;
  };
  std::vector<Local> local_levels;
  for (std::size_t j = 0; j < locals.size(); ++j) {
    const auto& s = locals[j];
    std::size_t c = 0;
    for (double e : s.values)
      if (window.contains(e)) {
        ++c;
        local_levels.push_back({j, e});
      }
    m.cube_counts.push_back(c);
    if (c > 1) {
      m.condition_i = false;
      m.violations.push_back("(i) cube " + std::to_string(j) + " has " + std::to_string(c) + " eigenvalues in I");
    }
  }

  std::vector<std::size_t> globals;
  for (std::size_t j = 0; j < global.values.size(); ++j)
    if (window.contains(global.values[j])) globals.push_back(j);
  if (!globals.empty() && !global.has_vectors()) fail(ErrorCode::provenance, "global spectrum lacks eigenvectors");

  m.condition_ii = true;
  for (std::size_t g : globals) {
    const Site c = global.box.site(localization_center(global.vector(g)));
    int depth = -1;
    for (std::size_t j = 0; j < decomp.count(); ++j) {
      const auto cube = decomp.cube(j);
      if (cube.contains(c)) depth = std::max(depth, cube.distance_to_complement(c));
    }
    m.center_depths.push_back(depth);
    if (depth < decomp.gap) {
      m.condition_ii = false;
      m.violations.push_back("(ii) eigenvalue " + std::to_string(g) + " centred at " + c.to_string() +
                             (depth < 0 ? " outside every cube" : " at depth " + std::to_string(depth)));
    }
  }

  // Greedy matching by increasing gap.
  struct Candidate {
    double gap;
    std::size_t g, l;
  };
  std::vector<Candidate> cand;
  for (std::size_t gi = 0; gi < globals.size(); ++gi)
    for (std::size_t li = 0; li < local_levels.size(); ++li)
      cand.push_back({std::abs(global.values[globals[gi]] - local_levels[li].energy), gi, li});
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });
  std::vector<bool> g_used(globals.size(), false), cube_used(locals.size(), false), l_used(local_levels.size(), false);
  for (const auto& c : cand) {
    const std::size_t cube = local_levels[c.l].cube;
    if (g_used[c.g] || cube_used[cube]) continue;
    g_used[c.g] = cube_used[cube] = l_used[c.l] = true;
    m.pairs.push_back({globals[c.g], global.values[globals[c.g]], cube, local_levels[c.l].energy, c.gap});
  }
  m.condition_iii = true;
  for (const auto& p : m.pairs)
    if (p.gap > m.threshold) {
      m.condition_iii = false;
      m.violations.push_back("(iii) gap " + std::to_string(p.gap) + " exceeds threshold for eigenvalue " +
                             std::to_string(p.global_index));
    }
  for (std::size_t gi = 0; gi < globals.size(); ++gi)
    if (!g_used[gi]) {
      m.condition_iii = false;
      m.violations.push_back("(iii) global eigenvalue " + std::to_string(globals[gi]) + " unmatched");
    }
  for (std::size_t li = 0; li < local_levels.size(); ++li)
    if (!l_used[li] && !cube_used[local_levels[li].cube]) {
      m.condition_iii = false;
      m.violations.push_back("(iii) local eigenvalue of cube " + std::to_string(local_levels[li].cube) +
                             " unmatched");
    }
  m.z_ok = m.condition_i && m.condition_ii && m.condition_iii;
  return m;
}

int bernoulli_x(const Spectrum& local, const Interval& interval, double margin) {
  std::size_t hit = 0, count = 0;
  for (std::size_t j = 0; j < local.values.size(); ++j)
    if (interval.contains(local.values[j])) {
      hit = j;
      ++count;
    }
  if (count != 1) return 0;
  const Site c = local.box.site(localization_center(local.vector(hit)));
  return local.box.distance_to_complement(c) > margin ? 1 : 0;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::domain, "rank correlation needs equal-length samples");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double chi_square_p_value(double chi_square, int dof) {
  if (dof <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * chi_square);
}

JointProcessReport joint_process(const std::vector<UnfoldedPointProcess>& processes, int half_side,
                                 int cells_per_axis) {
  if (cells_per_axis < 1) fail(ErrorCode::domain, "need at least one cell per axis");
  if (half_side < 0) fail(ErrorCode::domain, "half-side must be non-negative");
  JointProcessReport r;
  r.cells_per_axis = cells_per_axis;
  int d = 0;
  for (const auto& p : processes) {
    if (p.centers.size() != p.points.size()) fail(ErrorCode::domain, "process lacks localization centres");
    for (std::size_t j = 0; j < p.points.size(); ++j) {
      const Site& c = p.centers[j];
      d = c.dimension();
      std::vector<double> y(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) y[static_cast<std::size_t>(a)] = c[a] / (2.0 * half_side + 1.0);
      r.points.emplace_back(p.points[j], std::move(y));
    }
  }
  const std::size_t n = r.points.size();
  if (n == 0) return r;
  std::size_t cells = 1;
  for (int a = 0; a < d; ++a) cells *= static_cast<std::size_t>(cells_per_axis);
  std::vector<double> hist(cells, 0.0);
  for (const auto& [xi, y] : r.points) {
    std::size_t idx = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      auto b = static_cast<long long>(std::floor((y[static_cast<std::size_t>(a)] + 0.5) * cells_per_axis));
      b = std::clamp<long long>(b, 0, cells_per_axis - 1);
      idx += static_cast<std::size_t>(b) * stride;
      stride *= static_cast<std::size_t>(cells_per_axis);
    }
    hist[idx] += 1.0;
  }
  const double expected = static_cast<double>(n) / static_cast<double>(cells);
  for (double h : hist) r.chi_square += (h - expected) * (h - expected) / expected;
  r.degrees_of_freedom = static_cast<int>(cells) - 1;
  r.p_value = chi_square_p_value(r.chi_square, r.degrees_of_freedom);
  std::vector<double> xi(n), coord(n);
  for (std::size_t i = 0; i < n; ++i) xi[i] = r.points[i].first;
  for (int a = 0; a < d; ++a) {
    for (std::size_t i = 0; i < n; ++i) coord[i] = r.points[i].second[static_cast<std::size_t>(a)];
    r.rank_correlations.push_back(spearman(xi, coord));
  }
  r.correlation_bound = 3.0 / std::sqrt(static_cast<double>(n));
  return r;
}

}  // namespace alloy
