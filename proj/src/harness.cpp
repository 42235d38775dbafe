#include "alloylab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "alloylab/eig.hpp"
#include "alloylab/error.hpp"
#include "alloylab/operator.hpp"
#include "alloylab/verify.hpp"
#include "alloylab/wiener.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace alloy {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Sub-stream tags: the IDS calibration sample is independent of the main one.
constexpr std::uint64_t kMainStream = 0;
constexpr std::uint64_t kIdsStream = 1;

std::uint64_t stream_for(int half_side, std::uint64_t purpose) {
  return static_cast<std::uint64_t>(half_side) * 16 + purpose;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string site_text(const Site& s) {
  std::string out;
  for (int k = 0; k < s.dimension(); ++k) {
    if (k) out += ' ';
    out += std::to_string(s[k]);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Model {
  int dimension = 1;
  double coupling = 1.0;
  DisorderLaw law;
  SingleSitePotential u;
};

struct Realization {
  DisorderRealization omega;
  CorrelatedPotential v;
  HamiltonianMatrix h;
};

Realization realize(const Model& m, const PeriodicBox& box, std::uint64_t seed, std::uint64_t trial,
                    std::uint64_t stream) {
  Realization r;
  r.omega = sample_disorder(box, m.law, seed, trial, m.u.radius(), stream);
  r.v = correlate(r.omega, m.u, box);
  r.h = assemble(r.v, m.coupling);
  return r;
}

// #{E_j <= e} for every e of the grid.
std::vector<std::size_t> counts_on_grid(const HamiltonianMatrix& h, const std::vector<double>& grid) {
  std::vector<std::size_t> out(grid.size());
  if (h.box.dimension() == 1) {
    const PeriodicChain chain = PeriodicChain::from(h);
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] = chain.count_below(grid[g]);
  } else {
    const Spectrum s = eigvalsh(h);
    for (std::size_t g = 0; g < grid.size(); ++g)
      out[g] = static_cast<std::size_t>(std::upper_bound(s.values.begin(), s.values.end(), grid[g]) -
                                        s.values.begin());
  }
  return out;
}

class Context {
 public:
  Context(const ExperimentConfig& c, RunSummary& s)
      : config(c), summary(s), dir(c.output), threads(effective_threads(c.threads)) {}

  const ExperimentConfig& config;
  RunSummary& summary;
  fs::path dir;
  unsigned threads;

  void metric(const std::string& key, double value) { summary.metrics.emplace_back(key, value); }
  void verdict(const std::string& name, bool ok, const std::string& detail) {
    summary.verdicts.push_back({name, ok, detail});
  }
  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + (dir / name).string());
    out << content;
    if (!out) fail(ErrorCode::io, "write failed for " + (dir / name).string());
    summary.files.push_back(name);
  }
};

Model make_model(const ExperimentConfig& c) {
  return Model{c.dimension, c.coupling, build_law(c), build_potential(c)};
}

std::string tag(int half_side) { return "L" + std::to_string(half_side); }

// IDS from an independent calibration sample, written as plot data.
IdsCurve ids_pass(Context& ctx, const Model& m, const PeriodicBox& box, int half_side) {
  const double bmax = std::max(std::abs(m.law.lower()), std::abs(m.law.upper()));
  const double bound = 2.0 * m.dimension + m.coupling * m.u.l1_norm() * bmax + 0.1;
  const auto g = static_cast<std::size_t>(ctx.config.ids_grid_points);
  std::vector<double> grid(g);
  for (std::size_t i = 0; i < g; ++i) grid[i] = -bound + 2.0 * bound * static_cast<double>(i) / static_cast<double>(g - 1);
  const auto counts = detail::parallel_map(ctx.config.ids_trials, ctx.threads, [&](std::size_t t) {
    return counts_on_grid(realize(m, box, ctx.config.seed, t, stream_for(half_side, kIdsStream)).h, grid);
  });
  IdsCurve ids = ids_from_counts(counts, grid, box.volume());
  std::ostringstream out;
  for (std::size_t i = 0; i < g; ++i) out << num(ids.energies[i]) << ' ' << num(ids.values[i]) << '\n';
  ctx.write("ids_" + tag(half_side) + ".dat", out.str());
  return ids;
}

ReferenceEnergy reference(Context& ctx, const IdsCurve& ids, int half_side) {
  const ReferenceEnergy r = pick_reference_energy(ids, ctx.config.reference_rule, ctx.config.reference_energy);
  const std::string t = tag(half_side) + ".";
  ctx.metric(t + "e0", r.e0);
  ctx.metric(t + "n0", r.n0);
  ctx.metric(t + "bandwidth", r.bandwidth);
  ctx.metric(t + "n0_half_bandwidth", r.n0_half_bandwidth);
  ctx.metric(t + "n0_double_bandwidth", r.n0_double_bandwidth);
  return r;
}

// ---------------------------------------------------------------- poisson

void poisson_pipeline(Context& ctx) {
  const Model m = make_model(ctx.config);
  const auto& p = ctx.config.poisson;
  double window = 0.0;
  for (const auto& i : p.intervals) window = std::max({window, std::abs(i.lo), std::abs(i.hi)});
  window += 0.5;

  for (int L : ctx.config.box_sizes) {
    const PeriodicBox box = make_box(m.dimension, L);
    const IdsCurve ids = ids_pass(ctx, m, box, L);
    const ReferenceEnergy ref = reference(ctx, ids, L);
    const double scale = static_cast<double>(box.volume()) * ref.n0;
    const double lo = ref.e0 - window / scale, hi = ref.e0 + window / scale;

    const auto procs = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const auto r = realize(m, box, ctx.config.seed, t, stream_for(L, kMainStream));
      auto proc = unfold(eigh_window(r.h, lo, hi, false), ref.e0, ref.n0, window);
      proc.trial = t;
      return proc;
    });

    const std::size_t ni = p.intervals.size();
    std::vector<std::vector<std::size_t>> per(ni);
    for (std::size_t l = 0; l < ni; ++l) per[l] = interval_counts(procs, p.intervals[l]);
    {
      std::ostringstream out;
      out << "trial";
      for (std::size_t l = 0; l < ni; ++l) out << ",N" << l + 1;
      out << '\n';
      for (std::size_t t = 0; t < procs.size(); ++t) {
        out << t;
        for (std::size_t l = 0; l < ni; ++l) out << ',' << per[l][t];
        out << '\n';
      }
      ctx.write("poisson_counts_" + tag(L) + ".csv", out.str());
    }
    {
      std::ostringstream out;
      out << "trial,xi,energy\n";
      for (const auto& pr : procs)
        for (std::size_t j = 0; j < pr.points.size(); ++j)
          out << pr.trial << ',' << num(pr.points[j]) << ',' << num(pr.energies[j]) << '\n';
      ctx.write("poisson_points_" + tag(L) + ".csv", out.str());
    }

    std::ostringstream table;
    for (std::size_t l = 0; l < ni; ++l) table << 'k' << l + 1 << ',';
    table << "hits,trials,frequency,half_width,reference,deviation\n";
    std::vector<int> k(ni, 0);
    double worst = 0.0;
    for (;;) {
      const CountingEstimate c = counting_statistics(procs, p.intervals, k);
      const double dev = std::abs(c.frequency - c.reference);
      worst = std::max(worst, dev);
      for (int v : k) table << v << ',';
      table << c.hits << ',' << c.trials << ',' << num(c.frequency) << ',' << num(c.half_width) << ','
            << num(c.reference) << ',' << num(dev) << '\n';
      std::size_t a = 0;
      while (a < ni && ++k[a] > p.max_count) k[a++] = 0;
      if (a == ni) break;
    }
    ctx.write("poisson_table_" + tag(L) + ".csv", table.str());
    ctx.metric(tag(L) + ".max_deviation", worst);
    ctx.verdict("poisson " + tag(L), worst <= p.tolerance,
                "max |frequency - Poisson| = " + num(worst) + " vs " + num(p.tolerance));
  }
}

// ---------------------------------------------------------- wegner-minami

void wegner_pipeline(Context& ctx) {
  const Model m = make_model(ctx.config);
  const auto& p = ctx.config.wegner;
  std::ostringstream out;
  out << "L,volume,length,lo,hi,order,moment,moment_half_width,concentration,ratio,ratio_half_width\n";
  double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  std::size_t minami_bad = 0;
  double minami_worst = 0.0;

  for (int L : ctx.config.box_sizes) {
    const PeriodicBox box = make_box(m.dimension, L);
    const IdsCurve ids = ids_pass(ctx, m, box, L);
    const ReferenceEnergy ref = reference(ctx, ids, L);
    std::vector<Interval> intervals;
    std::vector<double> edges;
    for (double s : p.lengths) {
      intervals.push_back({ref.e0 - 0.5 * s, ref.e0 + 0.5 * s});
      edges.push_back(ref.e0 - 0.5 * s);
      edges.push_back(ref.e0 + 0.5 * s);
    }
    const auto counts = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const auto r = realize(m, box, ctx.config.seed, t, stream_for(L, kMainStream));
      const auto n = counts_on_grid(r.h, edges);
      std::vector<std::size_t> c(intervals.size());
      for (std::size_t i = 0; i < intervals.size(); ++i) c[i] = n[2 * i + 1] - n[2 * i];
      return c;
    });
    {
      std::ostringstream raw;
      raw << "trial";
      for (double s : p.lengths) raw << ",N_" << num(s);
      raw << '\n';
      for (std::size_t t = 0; t < counts.size(); ++t) {
        raw << t;
        for (std::size_t c : counts[t]) raw << ',' << c;
        raw << '\n';
      }
      ctx.write("wegner_counts_" + tag(L) + ".csv", raw.str());
    }
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      std::vector<std::size_t> col(counts.size());
      for (std::size_t t = 0; t < counts.size(); ++t) col[t] = counts[t][i];
      const auto rows = wegner_minami_rows(col, intervals[i], L, box.volume(), p.max_order, m.law);
      for (const auto& r : rows)
        out << L << ',' << r.volume << ',' << num(p.lengths[i]) << ',' << num(r.interval.lo) << ','
            << num(r.interval.hi) << ',' << r.order << ',' << num(r.moment.mean) << ','
            << num(r.moment.half_width) << ',' << num(r.concentration) << ',' << num(r.ratio) << ','
            << num(r.ratio_half_width) << '\n';
      rmax = std::max(rmax, rows[0].ratio);
      rmin = std::min(rmin, rows[0].ratio);
      if (rows.size() > 1) {
        const double allowed = 3.0 * rows[0].ratio * rows[0].ratio;
        const double lower = rows[1].ratio - rows[1].ratio_half_width;
        if (lower > allowed) ++minami_bad;
        if (allowed > 0) minami_worst = std::max(minami_worst, lower / allowed);
      }
    }
  }
  ctx.write("wegner_minami.csv", out.str());
  ctx.metric("wegner.max_ratio", rmax);
  ctx.metric("wegner.min_ratio", rmin);
  ctx.metric("wegner.spread", rmin > 0 ? rmax / rmin : std::numeric_limits<double>::infinity());
  ctx.verdict("wegner spread", rmin > 0 && rmax / rmin <= 2.0, "max/min k=1 ratio = " + num(rmax / rmin));
  if (p.max_order >= 2) {
    ctx.metric("minami.violations", static_cast<double>(minami_bad));
    ctx.metric("minami.worst_lower_over_allowed", minami_worst);
    ctx.verdict("minami", minami_bad == 0, std::to_string(minami_bad) + " configurations above 3x squared ratio");
  }
}

// ----------------------------------------------------------- localization

void localization_pipeline(Context& ctx) {
  const Model m = make_model(ctx.config);
  const auto& p = ctx.config.localization;
  for (int L : ctx.config.box_sizes) {
    const PeriodicBox box = make_box(m.dimension, L);
    const std::size_t n = box.volume();
    const auto first = static_cast<std::size_t>(std::floor(0.5 * (1.0 - p.spectrum_fraction) * static_cast<double>(n)));
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.spectrum_fraction * static_cast<double>(n))));
    const std::size_t last = std::min(n, first + count);

    const auto reports = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const auto r = realize(m, box, ctx.config.seed, t, stream_for(L, kMainStream));
      const Spectrum s = eigh(r.h);
      std::vector<LocalizationReport> out;
      for (std::size_t j = first; j < last; ++j) {
        auto rep = localize_vector(box, s.vector(j));
        rep.index = j;
        rep.energy = s.values[j];
        out.push_back(std::move(rep));
      }
      return out;
    });

    std::ostringstream out;
    out << "trial,index,energy,center,fit_valid,eta,log_prefactor,fit_points,mass_within,near_max_diameter\n";
    std::vector<double> etas;
    std::size_t total = 0, mass_ok = 0;
    for (std::size_t t = 0; t < reports.size(); ++t)
      for (const auto& r : reports[t]) {
        const auto R = static_cast<std::size_t>(p.mass_radius);
        const double within = R < r.mass_outside.size() ? 1.0 - r.mass_outside[R] : 1.0;
        ++total;
        if (within >= p.mass_fraction) ++mass_ok;
        if (r.fit_valid) etas.push_back(r.eta);
        out << t << ',' << r.index << ',' << num(r.energy) << ',' << site_text(r.center) << ','
            << (r.fit_valid ? 1 : 0) << ',' << num(r.eta) << ',' << num(r.log_prefactor) << ',' << r.fit_points
            << ',' << num(within) << ',' << r.near_max_diameter << '\n';
      }
    ctx.write("localization_" + tag(L) + ".csv", out.str());
    const double med = median(etas);
    const double frac = total ? static_cast<double>(mass_ok) / static_cast<double>(total) : 0.0;
    ctx.metric(tag(L) + ".median_eta", med);
    ctx.metric(tag(L) + ".valid_fit_fraction", total ? static_cast<double>(etas.size()) / static_cast<double>(total) : 0.0);
    ctx.metric(tag(L) + ".mass_fraction_ok", frac);
    ctx.metric(tag(L) + ".eigenvectors", static_cast<double>(total));
    ctx.verdict("localization " + tag(L), med >= 0.5 && frac >= 0.95,
                "median eta = " + num(med) + ", share with mass within radius = " + num(frac));
  }
}

// ----------------------------------------------------------------- wiener

void wiener_pipeline(Context& ctx) {
  const SingleSitePotential u = build_potential(ctx.config);
  const auto& p = ctx.config.wiener;
  const WienerData w = build_wiener(u, p.grid);
  const KappaResult k = kappa_from_lemma(u, w);
  // (C_s⁻¹)_{0,k} = v_{-k}, the slope of ω_0 against ω̃_k.
  const Site origin(u.dimension());
  const double slope = conditional_slope(u, p.torus_size, w.k, origin);

  ctx.metric("kappa", w.kappa);
  ctx.metric("kappa_lemma", k.kappa);
  ctx.metric("kappa_remainder", k.remainder);
  ctx.metric("conditional_slope", slope);
  ctx.metric("slope_gap", std::abs(k.kappa - std::abs(slope)));
  ctx.metric("identity_error", w.identity_error);
  ctx.metric("min_abs_multiplier", w.min_abs_multiplier);
  ctx.metric("max_abs_multiplier", w.max_abs_multiplier);
  ctx.metric("pairing_sum", w.pairing_sum);
  ctx.metric("grid", static_cast<double>(w.grid));
  ctx.metric("converged", w.converged ? 1.0 : 0.0);

  std::ostringstream csv;
  csv << "potential,grid,k,kappa,kappa_lemma,conditional_slope,slope_gap,identity_error,min_abs_multiplier\n";
  csv << u.name() << ',' << w.grid << ',' << site_text(w.k) << ',' << num(w.kappa) << ',' << num(k.kappa) << ','
      << num(slope) << ',' << num(std::abs(k.kappa - std::abs(slope))) << ',' << num(w.identity_error) << ','
      << num(w.min_abs_multiplier) << '\n';
  ctx.write("wiener.csv", csv.str());
  ctx.write("wiener_report.json", wiener_report_json(u, w));

  std::ostringstream prof;
  for (int n = -32; n <= 32; ++n) {
    Site s(u.dimension());
    s[0] = n;
    prof << n << ' ' << num(w.inverse_at(s)) << '\n';
  }
  ctx.write("wiener_inverse.dat", prof.str());

  if (p.transport_samples > 0) {
    const TransportCheck t = concentration_transport_check(u, p.torus_size, w.k, origin, build_law(ctx.config),
                                                           p.transport_samples, p.transport_bins, ctx.config.seed);
    ctx.metric("transport.slope", t.slope);
    ctx.metric("transport.p_value", t.p_value);
    ctx.metric("transport.max_identity_error", t.max_identity_error);
  }
  ctx.verdict("wiener slope", std::abs(k.kappa - std::abs(slope)) <= 1e-6,
              "|kappa - |slope|| = " + num(std::abs(k.kappa - std::abs(slope))));
  ctx.verdict("wiener identity", w.identity_error <= 1e-10, "max |u*v - delta| = " + num(w.identity_error));
}

// ------------------------------------------------ representation / truncation

struct BoxSetup {
  PeriodicBox box;
  BoxDecomposition decomp;
  Interval interval;
  ReferenceEnergy ref;
};

// Pre-flight: admissibility and decomposability for every size, before any
// diagonalisation.
void preflight_decomposition(const ExperimentConfig& c) {
  const auto& dp = c.representation.decomposition;
  const Admissibility a = admissible_params(c.dimension, dp);
  if (!a.ok) {
    std::string msg = "inadmissible parameters:";
    for (const auto& v : a.violations) msg += " " + v + ";";
    throw ConfigError("/params/decomposition", msg);
  }
  for (std::size_t i = 0; i < c.box_sizes.size(); ++i) {
    try {
      (void)decompose(make_box(c.dimension, c.box_sizes[i]), dp);
    } catch (const Error& e) {
      throw ConfigError("/box_sizes/" + std::to_string(i), e.what());
    }
  }
}

// I_Λ centred at E0 with IDS mass |Λ|^{-α}.
BoxSetup setup_box(Context& ctx, const Model& m, int L) {
  BoxSetup s;
  s.box = make_box(m.dimension, L);
  s.decomp = decompose(s.box, ctx.config.representation.decomposition);
  const IdsCurve ids = ids_pass(ctx, m, s.box, L);
  s.ref = reference(ctx, ids, L);
  const double vol = static_cast<double>(s.box.volume());
  const double len = std::pow(vol, -ctx.config.representation.decomposition.alpha) / s.ref.n0;
  s.interval = {s.ref.e0 - 0.5 * len, s.ref.e0 + 0.5 * len};
  const std::string t = tag(L) + ".";
  ctx.metric(t + "cube_side", s.decomp.cube_side);
  ctx.metric(t + "gap", s.decomp.gap);
  ctx.metric(t + "cubes", static_cast<double>(s.decomp.count()));
  ctx.metric(t + "interval_length", len);
  return s;
}

struct RepresentationTrial {
  std::vector<double> etas;
  bool cond_i = false, cond_ii = false, matched = false;
  std::size_t globals = 0;
  std::vector<MatchedPair> pairs;
};

void representation_pipeline(Context& ctx) {
  preflight_decomposition(ctx.config);
  const Model m = make_model(ctx.config);
  std::ostringstream trials_csv, pairs_csv;
  trials_csv << "L,trial,z_ok,cond_i,cond_ii,cond_iii,globals,pairs,max_gap,threshold\n";
  pairs_csv << "L,trial,global_index,global_energy,cube,local_energy,gap,threshold,z_ok\n";
  std::vector<double> probs;
  for (int L : ctx.config.box_sizes) {
    const BoxSetup s = setup_box(ctx, m, L);
    const auto results = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const auto r = realize(m, s.box, ctx.config.seed, t, stream_for(L, kMainStream));
      const Spectrum global = eigh_window(r.h, s.interval.lo, s.interval.hi, true);
      std::vector<Spectrum> locals;
      for (std::size_t j = 0; j < s.decomp.count(); ++j)
        locals.push_back(eigh(restrict(r.v, m.coupling, s.decomp.cube(j))));
      RepresentationTrial out;
      for (std::size_t j = 0; j < global.values.size(); ++j) {
        const auto rep = localize_vector(s.box, global.vector(j));
        if (rep.fit_valid) out.etas.push_back(rep.eta);
      }
      // With η = 0 the gap threshold is 1, so (iii) reduces to "every level matched";
      // the η̂-dependent gap test is applied once η̂ is known.
      const MatchReport mr = match_local_global(global, locals, s.decomp, s.interval, 0.0);
      out.cond_i = mr.condition_i;
      out.cond_ii = mr.condition_ii;
      out.matched = mr.condition_iii;
      out.globals = global.values.size();
      out.pairs = mr.pairs;
      return out;
    });

    std::vector<double> etas;
    for (const auto& r : results) etas.insert(etas.end(), r.etas.begin(), r.etas.end());
    const double eta = median(etas);
    const double threshold = std::isfinite(eta) ? std::exp(-eta * s.decomp.gap / 2.0) : 1.0;
    std::size_t ok = 0, ci = 0, cii = 0, ciii = 0, empty = 0;
    double mean_globals = 0.0;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const auto& r = results[t];
      double max_gap = 0.0;
      for (const auto& pr : r.pairs) max_gap = std::max(max_gap, pr.gap);
      const bool iii = r.matched && max_gap <= threshold;
      const bool z = r.cond_i && r.cond_ii && iii;
      ok += z;
      ci += r.cond_i;
      cii += r.cond_ii;
      ciii += iii;
      empty += r.globals == 0;
      mean_globals += static_cast<double>(r.globals);
      trials_csv << L << ',' << t << ',' << z << ',' << r.cond_i << ',' << r.cond_ii << ',' << iii << ','
                 << r.globals << ',' << r.pairs.size() << ',' << num(max_gap) << ',' << num(threshold) << '\n';
      for (const auto& pr : r.pairs)
        pairs_csv << L << ',' << t << ',' << pr.global_index << ',' << num(pr.global_energy) << ',' << pr.cube
                  << ',' << num(pr.local_energy) << ',' << num(pr.gap) << ',' << num(threshold) << ',' << z << '\n';
    }
    const double n = static_cast<double>(results.size());
    const double prob = static_cast<double>(ok) / n;
    probs.push_back(prob);
    const std::string tg = tag(L) + ".";
    ctx.metric(tg + "eta", eta);
    ctx.metric(tg + "threshold", threshold);
    ctx.metric(tg + "p_ok", prob);
    ctx.metric(tg + "p_ok_half_width", 3.0 * std::sqrt(prob * (1.0 - prob) / n));
    ctx.metric(tg + "p_condition_i", static_cast<double>(ci) / n);
    ctx.metric(tg + "p_condition_ii", static_cast<double>(cii) / n);
    ctx.metric(tg + "p_condition_iii", static_cast<double>(ciii) / n);
    ctx.metric(tg + "p_no_eigenvalue", static_cast<double>(empty) / n);
    ctx.metric(tg + "mean_eigenvalues_in_interval", mean_globals / n);
  }
  ctx.write("representation_trials.csv", trials_csv.str());
  ctx.write("representation_pairs.csv", pairs_csv.str());
  bool monotone = true;
  for (std::size_t i = 1; i < probs.size(); ++i) monotone = monotone && probs[i] >= probs[i - 1];
  ctx.verdict("representation monotone", monotone, "P(Z ok) by size nondecreasing");
  ctx.verdict("representation level", !probs.empty() && probs.back() >= 0.8,
              "P(Z ok) at the largest size = " + num(probs.empty() ? 0.0 : probs.back()));
}

struct TruncationTrial {
  LemmaCheckResult sandwich;
  SandwichCounts counts;
  LemmaCheckResult perturbation;
  int xa = 0, xb = 0;
};

void truncation_pipeline(Context& ctx) {
  preflight_decomposition(ctx.config);
  const Model m = make_model(ctx.config);
  const auto& rp = ctx.config.representation;
  const double bmax = std::max(std::abs(m.law.lower()), std::abs(m.law.upper()));
  std::ostringstream csv;
  csv << "L,trial,cubes,holds,lower_ones,middle_ones,upper_ones,max_perturbation,deterministic_bound,threshold,"
         "exceedances,x_a,x_b\n";
  std::size_t total_cubes = 0, total_holds = 0, det_violations = 0;
  for (int L : ctx.config.box_sizes) {
    const BoxSetup s = setup_box(ctx, m, L);
    const int ell2 = rp.truncation_radius >= 0 ? rp.truncation_radius : s.decomp.gap / 3;
    if (3 * ell2 > s.decomp.cube_side)
      throw ConfigError("/params/truncation_radius", "must not exceed a third of the cube side");
    const double vol = static_cast<double>(s.box.volume());
    const double shift = rp.epsilon / (vol * s.ref.n0);
    // The same energy scale written as ε L^{-d}.
    const double eps_scaled = shift * std::pow(static_cast<double>(L), m.dimension);
    const SingleSitePotential cut = truncate(m.u, ell2);

    // Cube pair for the independence test: cube 0 and the one farthest from it.
    std::size_t far = 0;
    int far_dist = -1;
    for (std::size_t j = 1; j < s.decomp.count(); ++j) {
      const int dd = cube_distance(s.box, s.decomp.cube(0), s.decomp.cube(j));
      if (dd > far_dist) {
        far_dist = dd;
        far = j;
      }
    }
    const bool pair_ok = far_dist > 2 * ell2;

    const auto results = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const DisorderRealization omega =
          sample_disorder(s.box, m.law, ctx.config.seed, t, m.u.radius(), stream_for(L, kMainStream));
      TruncationTrial out;
      out.sandwich = truncation_sandwich_check(omega, m.u, m.coupling, s.decomp, ell2, s.interval, shift, &out.counts);
      out.perturbation = perturbation_norm_check(omega, m.u, m.coupling, s.decomp, ell2, eps_scaled, bmax);
      if (pair_ok) {
        const CorrelatedPotential v = correlate(omega, cut, s.box);
        out.xa = bernoulli_x(eigh(restrict(v, m.coupling, s.decomp.cube(0))), s.interval, s.decomp.gap);
        out.xb = bernoulli_x(eigh(restrict(v, m.coupling, s.decomp.cube(far))), s.interval, s.decomp.gap);
      }
      return out;
    });

    std::size_t cubes = 0, holds = 0, exceed = 0, lower = 0, middle = 0, upper = 0;
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const auto& r = results[t];
      const std::size_t h = r.sandwich.trials - r.sandwich.violations;
      cubes += r.sandwich.trials;
      holds += h;
      lower += r.counts.lower_ones;
      middle += r.counts.middle_ones;
      upper += r.counts.upper_ones;
      det_violations += r.perturbation.violations;
      const auto ex = static_cast<std::size_t>(r.perturbation.extra("exceedances"));
      exceed += ex;
      pairs.emplace_back(r.xa, r.xb);
      csv << L << ',' << t << ',' << r.sandwich.trials << ',' << h << ',' << r.counts.lower_ones << ','
          << r.counts.middle_ones << ',' << r.counts.upper_ones << ',' << num(r.perturbation.observed) << ','
          << num(r.perturbation.bound) << ',' << num(r.perturbation.extra("threshold")) << ',' << ex << ','
          << r.xa << ',' << r.xb << '\n';
    }
    total_cubes += cubes;
    total_holds += holds;
    const std::string tg = tag(L) + ".";
    const double freq = cubes ? static_cast<double>(holds) / static_cast<double>(cubes) : 1.0;
    ctx.metric(tg + "truncation_radius", ell2);
    ctx.metric(tg + "interval_shift", shift);
    ctx.metric(tg + "sandwich_frequency", freq);
    ctx.metric(tg + "lower_one_rate", cubes ? static_cast<double>(lower) / static_cast<double>(cubes) : 0.0);
    ctx.metric(tg + "middle_one_rate", cubes ? static_cast<double>(middle) / static_cast<double>(cubes) : 0.0);
    ctx.metric(tg + "upper_one_rate", cubes ? static_cast<double>(upper) / static_cast<double>(cubes) : 0.0);
    ctx.metric(tg + "exceedance_frequency", cubes ? static_cast<double>(exceed) / static_cast<double>(cubes) : 0.0);
    if (!results.empty()) ctx.metric(tg + "hoeffding_cube_budget", results[0].perturbation.extra("hoeffding_cube_budget"));
    if (pair_ok && pairs.size() >= 2) {
      const auto ind = independence_check(pairs, s.box, s.decomp.cube(0), s.decomp.cube(far), ell2);
      ctx.metric(tg + "independence_cov", ind.observed);
      ctx.metric(tg + "independence_band", ind.half_width);
    }
  }
  ctx.write("truncation.csv", csv.str());
  const double freq = total_cubes ? static_cast<double>(total_holds) / static_cast<double>(total_cubes) : 1.0;
  ctx.metric("sandwich_frequency", freq);
  ctx.metric("perturbation_violations", static_cast<double>(det_violations));
  ctx.verdict("truncation sandwich", freq >= 0.95, "sandwich holds in " + num(freq) + " of (trial, cube) pairs");
  ctx.verdict("perturbation bound", det_violations == 0, "deterministic tail bound breaches");
}

// ----------------------------------------------------------------- lemmas

HamiltonianMatrix random_chain(std::uint64_t seed, std::uint64_t instance, std::uint64_t stream, int size,
                               double coupling) {
  const PeriodicBox box(1, size, Site{0});
  Rng rng(seed, instance, stream);
  CorrelatedPotential v;
  v.box = box;
  v.values.resize(box.volume());
  for (double& x : v.values) x = rng.uniform(-0.5, 0.5);
  return assemble(v, coupling, box);
}

void lemma_row(std::ostringstream& out, const std::string& config, const LemmaCheckResult& r) {
  out << r.lemma << ',' << config << ',' << r.trials << ',' << r.violations << ',' << num(r.worst_margin) << ','
      << num(r.bound) << ',' << num(r.observed) << ',' << num(r.half_width) << '\n';
}

void lemmas_pipeline(Context& ctx) {
  const auto& p = ctx.config.lemmas;
  const DisorderLaw law = build_law(ctx.config);
  const std::uint64_t seed = ctx.config.seed;
  std::ostringstream out;
  out << "lemma,config,trials,violations,worst_margin,bound,observed,half_width\n";

  const auto mono = detail::parallel_map(p.monotonicity_instances, ctx.threads, [&](std::size_t i) {
    Rng rng(seed, i, 100);
    const double coupling = rng.uniform(1.0, 10.0);
    const HamiltonianMatrix h = random_chain(seed, i, 101, p.monotonicity_size, coupling);
    const auto site = static_cast<std::size_t>(rng.below(h.n));
    const double s = rng.uniform(0.0, 5.0);
    const double t = s + rng.uniform(0.0, 5.0);
    const double span = h.norm_bound() + 5.0;
    double a = rng.uniform(-span, span), b = rng.uniform(-span, span);
    if (a > b) std::swap(a, b);
    return monotonicity_check(h, site, s, t, {a, b});
  });
  std::size_t mono_bad = 0;
  for (std::size_t i = 0; i < mono.size(); ++i) {
    mono_bad += mono[i].violations;
    lemma_row(out, "instance " + std::to_string(i), mono[i]);
  }

  struct AvgCase {
    double coupling, length;
  };
  std::vector<AvgCase> cases;
  for (double c : p.averaging_couplings)
    for (double l : p.averaging_lengths) cases.push_back({c, l});
  const auto avg = detail::parallel_map(cases.size(), ctx.threads, [&](std::size_t i) {
    Rng rng(seed, i, 200);
    const HamiltonianMatrix h = random_chain(seed, i, 201, p.averaging_size, cases[i].coupling);
    const auto site = static_cast<std::size_t>(rng.below(h.n));
    const double centre = rng.uniform(-2.0, 2.0);
    const Interval iv{centre - 0.5 * cases[i].length, centre + 0.5 * cases[i].length};
    return spectral_averaging_check(h, site, law, iv, p.averaging_samples, trial_seed(seed, i, 202));
  });
  std::size_t avg_bad = 0;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    avg_bad += avg[i].violations;
    lemma_row(out, "coupling " + num(cases[i].coupling) + " length " + num(cases[i].length), avg[i]);
  }

  // Truncated localized eigenvectors of strongly disordered chains, plus two
  // closed-form cases: an exact eigenvector and a (0.9, 0.1) two-level mix.
  const auto approx = detail::parallel_map(p.approx_instances + 2, ctx.threads, [&](std::size_t i) {
    Rng rng(seed, i, 300);
    const HamiltonianMatrix h = random_chain(seed, i, 301, p.approx_size, 10.0);
    const Spectrum s = eigh(h);
    const auto j = static_cast<std::size_t>(rng.below(h.n));
    std::vector<double> phi(h.n, 0.0);
    double energy = s.values[j];
    if (i == 0) {
      const auto v = s.vector(j);
      phi.assign(v.begin(), v.end());
    } else if (i == 1) {
      const std::size_t k = j + 1 < h.n ? j + 1 : j - 1;
      const double a = std::sqrt(0.9), b = std::sqrt(0.1);
      for (std::size_t x = 0; x < h.n; ++x) phi[x] = a * s.vector(j)[x] + b * s.vector(k)[x];
      energy = 0.9 * s.values[j] + 0.1 * s.values[k];
    } else {
      const auto v = s.vector(j);
      const std::size_t c = localization_center(v);
      double norm = 0.0;
      for (std::size_t x = 0; x < h.n; ++x)
        if (h.box.torus_distance_index(c, x) <= p.approx_radius) {
          phi[x] = v[x];
          norm += v[x] * v[x];
        }
      norm = std::sqrt(norm);
      for (double& x : phi) x /= norm;
    }
    double n2 = 0.0;
    for (double x : phi) n2 += x * x;
    for (double& x : phi) x /= std::sqrt(n2);
    // ε is set to the residual itself so that the 2ε clause is always exercised.
    double res2 = 0.0;
    for (std::size_t x = 0; x < h.n; ++x) {
      double y = -energy * phi[x];
      for (std::size_t z = 0; z < h.n; ++z) y += h(x, z) * phi[z];
      res2 += y * y;
    }
    return approx_eigvector_check(h, phi, energy, std::sqrt(res2));
  });
  std::size_t approx_bad = 0;
  double max_center = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    approx_bad += approx[i].violations;
    max_center = std::max(max_center, approx[i].extra("center_to_support"));
    lemma_row(out, i == 0 ? "exact eigenvector" : i == 1 ? "two-level mix" : "truncated " + std::to_string(i - 2),
              approx[i]);
  }
  ctx.write("lemma_report.csv", out.str());

  ctx.metric("monotonicity.instances", static_cast<double>(mono.size()));
  ctx.metric("monotonicity.violations", static_cast<double>(mono_bad));
  ctx.metric("averaging.configurations", static_cast<double>(avg.size()));
  ctx.metric("averaging.violations", static_cast<double>(avg_bad));
  ctx.metric("approx.instances", static_cast<double>(approx.size()));
  ctx.metric("approx.violations", static_cast<double>(approx_bad));
  ctx.metric("approx.max_center_to_support", max_center);
  ctx.verdict("monotonicity", mono_bad == 0, std::to_string(mono_bad) + " violations");
  ctx.verdict("spectral averaging", avg_bad == 0, std::to_string(avg_bad) + " sweep points above 8S + 3 sigma");
  ctx.verdict("approximate eigenvector", approx_bad == 0, std::to_string(approx_bad) + " violations");
}

// ------------------------------------------------------------------ joint

void joint_pipeline(Context& ctx) {
  const Model m = make_model(ctx.config);
  const auto& p = ctx.config.joint;
  for (int L : ctx.config.box_sizes) {
    const PeriodicBox box = make_box(m.dimension, L);
    const IdsCurve ids = ids_pass(ctx, m, box, L);
    const ReferenceEnergy ref = reference(ctx, ids, L);
    const double scale = static_cast<double>(box.volume()) * ref.n0;
    const double lo = ref.e0 - p.window / scale, hi = ref.e0 + p.window / scale;
    const auto procs = detail::parallel_map(ctx.config.trials, ctx.threads, [&](std::size_t t) {
      const auto r = realize(m, box, ctx.config.seed, t, stream_for(L, kMainStream));
      auto proc = unfold(eigh_window(r.h, lo, hi, true), ref.e0, ref.n0, p.window);
      proc.trial = t;
      return proc;
    });
    std::ostringstream out;
    out << "trial,xi";
    for (int a = 0; a < m.dimension; ++a) out << ",x" << a;
    out << '\n';
    for (const auto& pr : procs)
      for (std::size_t j = 0; j < pr.points.size(); ++j) {
        out << pr.trial << ',' << num(pr.points[j]);
        for (int a = 0; a < m.dimension; ++a) out << ',' << num(pr.centers[j][a] / (2.0 * L + 1.0));
        out << '\n';
      }
    ctx.write("joint_points_" + tag(L) + ".csv", out.str());
    const JointProcessReport jr = joint_process(procs, L, p.cells_per_axis);
    double worst = 0.0;
    for (double r : jr.rank_correlations) worst = std::max(worst, std::abs(r));
    const std::string tg = tag(L) + ".";
    ctx.metric(tg + "points", static_cast<double>(jr.points.size()));
    ctx.metric(tg + "chi_square", jr.chi_square);
    ctx.metric(tg + "p_value", jr.p_value);
    ctx.metric(tg + "max_abs_rank_correlation", worst);
    ctx.metric(tg + "rank_correlation_bound", jr.correlation_bound);
    ctx.verdict("joint " + tag(L), jr.p_value >= 1e-3 && worst <= jr.correlation_bound,
                "chi-square p = " + num(jr.p_value) + ", max |rho| = " + num(worst));
  }
}

}  // namespace

HamiltonianMatrix realize_hamiltonian(const ExperimentConfig& config, int half_side, std::uint64_t trial) {
  const Model m = make_model(config);
  return realize(m, make_box(m.dimension, half_side), config.seed, trial, stream_for(half_side, kMainStream)).h;
}

unsigned effective_threads(unsigned budget) {
  if (budget > 0) return budget;
  return std::max(1u, std::thread::hardware_concurrency());
}

ReferenceEnergy pick_reference_energy(const IdsCurve& ids, ReferenceRule rule, double fixed_energy) {
  if (ids.energies.size() < 3) fail(ErrorCode::reference_energy, "IDS grid too coarse");
  const double lo = ids.energies.front(), hi = ids.energies.back();
  ReferenceEnergy r;
  if (rule == ReferenceRule::fixed) {
    r.e0 = fixed_energy;
    if (r.e0 <= lo || r.e0 >= hi) fail(ErrorCode::reference_energy, "fixed energy outside the IDS grid");
  } else {
    std::size_t g = 0;
    while (g + 1 < ids.values.size() && ids.values[g + 1] < 0.5) ++g;
    if (g + 1 >= ids.values.size() || ids.values[g] > 0.5)
      fail(ErrorCode::reference_energy, "IDS never crosses 1/2 on the grid");
    const double v0 = ids.values[g], v1 = ids.values[g + 1];
    const double t = v1 > v0 ? (0.5 - v0) / (v1 - v0) : 0.5;
    r.e0 = ids.energies[g] + t * (ids.energies[g + 1] - ids.energies[g]);
  }
  const double room = std::min(r.e0 - lo, hi - r.e0);
  const auto density = [&](double h) { return dos_at(ids, r.e0, std::min(h, room)).value; };
  double h = 0.05;
  double n = density(h);
  if (!(n >= kMinDensity))
    fail(ErrorCode::reference_energy, "estimated density " + num(n) + " below " + num(kMinDensity) + " at E0 = " + num(r.e0));
  h = std::max(0.05, 10.0 / (n * static_cast<double>(std::max<std::size_t>(ids.volume, 1))));
  h = std::min(h, room);
  n = density(h);
  if (!(n >= kMinDensity))
    fail(ErrorCode::reference_energy, "estimated density " + num(n) + " below " + num(kMinDensity) + " at E0 = " + num(r.e0));
  r.n0 = n;
  r.bandwidth = h;
  r.n0_half_bandwidth = density(0.5 * h);
  r.n0_double_bandwidth = density(2.0 * h);
  return r;
}

bool RunSummary::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

std::optional<double> RunSummary::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  return std::nullopt;
}

std::string RunSummary::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["wall_seconds"] = wall_seconds;
  j["versions"] = {{"alloylab", kVersion}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}};
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? json(v) : json(nullptr);
  j["metrics"] = m;
  json vs = json::array();
  for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["verdicts"] = vs;
  j["passed"] = passed();
  j["files"] = files;
  return j.dump(2);
}

RunSummary run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.experiment = config.experiment;
  summary.config_hash = config_hash(config);
  if ((config.experiment != "wiener" && config.experiment != "lemmas") && config.box_sizes.empty())
    throw ConfigError("/box_sizes", "required");
  if (config.experiment == "representation" || config.experiment == "truncation") preflight_decomposition(config);
  if (config.experiment != "lemmas") (void)build_potential(config);

  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + config.output + "': " + ec.message());

  Context ctx(config, summary);
  ctx.write("config.json", config.source_text.empty() ? resolved_config_json(config) : config.source_text);
  ctx.write("config.resolved.json", resolved_config_json(config));

  const std::string& e = config.experiment;
  if (e == "poisson") poisson_pipeline(ctx);
  else if (e == "wegner-minami") wegner_pipeline(ctx);
  else if (e == "localization") localization_pipeline(ctx);
  else if (e == "wiener") wiener_pipeline(ctx);
  else if (e == "representation") representation_pipeline(ctx);
  else if (e == "truncation") truncation_pipeline(ctx);
  else if (e == "lemmas") lemmas_pipeline(ctx);
  else if (e == "joint") joint_pipeline(ctx);
  else throw ConfigError("/experiment", "unknown experiment '" + e + "'");

  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary.files.push_back("summary.json");
  ctx.write("summary.json", summary.to_json());
  summary.files.pop_back();
  return summary;
}

}  // namespace alloy
