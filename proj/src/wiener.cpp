#include "alloylab/wiener.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "alloylab/error.hpp"
#include "alloylab/rng.hpp"
#include "fourier.hpp"
#include "json.hpp"

namespace alloy {

namespace {

using detail::cplx;

std::size_t torus_position(const Site& n, std::size_t side) {
  const auto s = static_cast<long long>(side);
  std::size_t idx = 0, stride = 1;
  for (int a = 0; a < n.dimension(); ++a) {
    long long c = n[a] % s;
    if (c < 0) c += s;
    idx += static_cast<std::size_t>(c) * stride;
    stride *= side;
  }
  return idx;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

struct Term {
  Site offset;
  double value;
};

std::vector<Term> terms_of(const SingleSitePotential& u) {
  std::vector<Term> out;
  const auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0.0) out.push_back({u.support().site(i), c[i]});
  return out;
}

bool lex_less(const Site& a, const Site& b) {
  for (int i = 0; i < a.dimension(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

struct GridResult {
  std::vector<cplx> m;
  std::vector<double> v;
  double min_abs = 0.0, max_abs = 0.0;
};

GridResult invert_on_grid(const std::vector<Term>& terms, int d, std::size_t n) {
  const std::size_t total = ipow(n, d);
  std::vector<cplx> a(total, 0.0);
  for (const auto& t : terms) a[torus_position(t.offset, n)] += t.value;
  detail::fft_nd(a, d, n, true);
  GridResult g;
  g.m = a;
  g.min_abs = std::numeric_limits<double>::infinity();
  for (const auto& z : a) {
    g.min_abs = std::min(g.min_abs, std::abs(z));
    g.max_abs = std::max(g.max_abs, std::abs(z));
  }
  if (!(g.min_abs > 1e-6))
    fail(ErrorCode::non_invertible_multiplier, "multiplier vanishes (min |M| on the grid = " +
                                                   std::to_string(g.min_abs) + ")");
  for (auto& z : a) z = 1.0 / z;
  detail::fft_nd(a, d, n, false);
  g.v.resize(total);
  for (std::size_t i = 0; i < total; ++i) g.v[i] = a[i].real() / static_cast<double>(total);
  return g;
}

std::size_t grid_cap(int d) {
  switch (d) {
    case 1: return std::size_t{1} << 20;
    case 2: return std::size_t{1} << 11;
    case 3: return std::size_t{1} << 7;
    default: return std::size_t{1} << 4;
  }
}

// Iterates the sites of [-r, r]^d.
template <class F>
void for_each_in_cube(int d, int r, F&& f) {
  Site x(d);
  for (int k = 0; k < d; ++k) x[k] = -r;
  while (true) {
    f(x);
    int k = 0;
    for (; k < d; ++k) {
      if (x[k] < r) {
        ++x[k];
        break;
      }
      x[k] = -r;
    }
    if (k == d) break;
  }
}

}  // namespace

double WienerData::inverse_at(const Site& n) const { return inverse[torus_position(n, grid)]; }

KappaResult kappa_from_lemma(const SingleSitePotential& u, const WienerData& data) {
  if (data.a == 0.0 || data.a_tilde == 0.0)
    fail(ErrorCode::assumption_failure, "a·ã vanishes; no admissible shift k");
  KappaResult r;
  double max_v = 0.0;
  for (double x : data.inverse) max_v = std::max(max_v, std::abs(x));
  for (const auto& t : terms_of(u)) {
    if (t.offset == data.k) continue;
    Site neg(u.dimension());
    for (int a = 0; a < u.dimension(); ++a) neg[a] = -t.offset[a];
    r.partial_sum += t.value * data.inverse_at(neg);
  }
  r.kappa = std::abs((1.0 - r.partial_sum) / data.a);
  r.remainder = u.tail_sum(u.radius() + 1, 1) * max_v;
  return r;
}

WienerData build_wiener(const SingleSitePotential& u, std::size_t grid) {
  if (!detail::is_power_of_two(grid) || grid < 128)
    fail(ErrorCode::domain, "grid size must be a power of two >= 128");
  const int d = u.dimension();
  const auto check = check_assumptions(u, static_cast<int>(std::min<std::size_t>(grid, d == 1 ? 4096 : 128)));
  if (!check.passes_h)
    fail(ErrorCode::non_invertible_multiplier,
         "assumption (H) fails: min |M| = " + std::to_string(check.min_multiplier));
  const auto terms = terms_of(u);
  std::size_t n = grid;
  while (n < static_cast<std::size_t>(4 * u.radius() + 2)) n *= 2;
  const std::size_t cap = std::max(grid_cap(d), n);

  WienerData w;
  w.dimension = d;
  GridResult cur = invert_on_grid(terms, d, n);
  w.grid_history.push_back(n);
  while (true) {
    if (n * 2 > cap) break;
    GridResult next = invert_on_grid(terms, d, n * 2);
    w.grid_history.push_back(n * 2);
    double diff = 0.0;
    for_each_in_cube(d, static_cast<int>(n / 4), [&](const Site& s) {
      diff = std::max(diff, std::abs(cur.v[torus_position(s, n)] - next.v[torus_position(s, n * 2)]));
    });
    w.inverse_change = diff;
    n *= 2;
    cur = std::move(next);
    if (diff < 1e-12) {
      w.converged = true;
      break;
    }
  }
  w.grid = n;
  w.multiplier = std::move(cur.m);
  w.inverse = std::move(cur.v);
  w.min_abs_multiplier = cur.min_abs;
  w.max_abs_multiplier = cur.max_abs;

  // Shift k: maximise |u(k) v(-k)|, ties to the lexicographically smallest k.
  double best = -1.0;
  for (const auto& t : terms) {
    Site neg(d);
    for (int a = 0; a < d; ++a) neg[a] = -t.offset[a];
    const double val = std::abs(t.value * w.inverse_at(neg));
    const bool better = val > best * (1.0 + 1e-12);
    const bool tie = !better && val >= best * (1.0 - 1e-12);
    if (better || (tie && lex_less(t.offset, w.k))) {
      best = std::max(best, val);
      w.k = t.offset;
      w.a = t.value;
      w.a_tilde = w.inverse_at(neg);
    }
  }

  // u ⋆ v on the index torus, summed directly in real space.
  const std::size_t total = ipow(n, d);
  const bool full = total * terms.size() <= 200'000'000;
  auto conv_at = [&](const Site& m) {
    double s = 0.0;
    for (const auto& t : terms) s += t.value * w.inverse[torus_position(m - t.offset, n)];
    return s;
  };
  if (full) {
    const PeriodicBox torus(d, static_cast<int>(n), Site(d));
    for (std::size_t i = 0; i < total; ++i) {
      const Site m = torus.site(i);
      const double target = i == 0 ? 1.0 : 0.0;
      w.identity_error = std::max(w.identity_error, std::abs(conv_at(m) - target));
    }
  } else {
    for_each_in_cube(d, 16, [&](const Site& m) {
      const double target = m.max_norm() == 0 ? 1.0 : 0.0;
      w.identity_error = std::max(w.identity_error, std::abs(conv_at(m) - target));
    });
  }
  w.pairing_sum = conv_at(Site(d));
  const auto kr = kappa_from_lemma(u, w);
  w.kappa = kr.kappa;
  w.kappa_remainder = kr.remainder;
  return w;
}

namespace {

// Circulant convolution by u wrapped onto (Z/sZ)^d.
class Circulant {
 public:
  Circulant(const SingleSitePotential& u, int s) : d_(u.dimension()), s_(s), torus_(d_, s, Site(d_)) {
    std::vector<double> w(torus_.volume(), 0.0);
    for (const auto& t : terms_of(u)) w[torus_position(t.offset, static_cast<std::size_t>(s))] += t.value;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] != 0.0) terms_.push_back({torus_.site(i), w[i]});
    // Index shifts per term for every site, precomputed once.
    shift_.resize(terms_.size() * torus_.volume());
    shift_t_.resize(shift_.size());
    for (std::size_t m = 0; m < torus_.volume(); ++m) {
      const Site x = torus_.site(m);
      for (std::size_t k = 0; k < terms_.size(); ++k) {
        shift_[m * terms_.size() + k] = torus_position(x - terms_[k].offset, static_cast<std::size_t>(s));
        shift_t_[m * terms_.size() + k] = torus_position(x + terms_[k].offset, static_cast<std::size_t>(s));
      }
    }
  }

  std::size_t size() const { return torus_.volume(); }
  const PeriodicBox& torus() const { return torus_; }

  void apply(const std::vector<double>& x, std::vector<double>& y, bool transpose) const {
    const auto& sh = transpose ? shift_t_ : shift_;
    const std::size_t nt = terms_.size();
    for (std::size_t m = 0; m < size(); ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nt; ++k) acc += terms_[k].value * x[sh[m * nt + k]];
      y[m] = acc;
    }
  }

  double min_abs_multiplier() const {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) {
      const Site q = torus_.site(j);
      cplx z = 0.0;
      for (const auto& t : terms_) {
        double ph = 0.0;
        for (int a = 0; a < d_; ++a) ph += 2.0 * std::numbers::pi * q[a] * t.offset[a] / s_;
        z += t.value * cplx(std::cos(ph), std::sin(ph));
      }
      lo = std::min(lo, std::abs(z));
    }
    return lo;
  }

  // CGLS solve of C x = b (or C^T x = b).
  std::vector<double> solve(const std::vector<double>& b, bool transpose) const {
    const std::size_t n = size();
    std::vector<double> x(n, 0.0), r = b, s(n), p(n), q(n);
    apply(r, s, !transpose);
    p = s;
    auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
      double t = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) t += a[i] * c[i];
      return t;
    };
    double gamma = dot(s, s);
    const double target = 1e-30 * gamma;
    for (int it = 0; it < 50000 && gamma > target; ++it) {
      apply(p, q, transpose);
      const double alpha = gamma / dot(q, q);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      apply(r, s, !transpose);
      const double g2 = dot(s, s);
      const double beta = g2 / gamma;
      gamma = g2;
      for (std::size_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];
    }
    if (!(gamma <= target * 1e6)) fail(ErrorCode::non_convergence, "conjugate gradients did not converge");
    return x;
  }

 private:
  int d_;
  int s_;
  PeriodicBox torus_;
  std::vector<Term> terms_;
  std::vector<std::size_t> shift_, shift_t_;
};

Circulant checked_circulant(const SingleSitePotential& u, int s) {
  if (s < 1) fail(ErrorCode::domain, "torus size must be positive");
  Circulant c(u, s);
  if (!(c.min_abs_multiplier() > 1e-10))
    fail(ErrorCode::torus_resonance, "discrete multiplier vanishes on the torus of size " + std::to_string(s) +
                                         "; retry with a different size");
  return c;
}

}  // namespace

double conditional_slope(const SingleSitePotential& u, int torus_size, const Site& m0, const Site& n0) {
  const Circulant c = checked_circulant(u, torus_size);
  std::vector<double> e(c.size(), 0.0);
  e[torus_position(m0, static_cast<std::size_t>(torus_size))] = 1.0;
  const auto x = c.solve(e, false);
  return x[torus_position(n0, static_cast<std::size_t>(torus_size))];
}

TransportCheck concentration_transport_check(const SingleSitePotential& u, int torus_size, const Site& m0,
                                             const Site& n0, const DisorderLaw& law, std::size_t samples,
                                             int bins, std::uint64_t seed) {
  if (bins < 2) fail(ErrorCode::domain, "need at least two histogram bins");
  if (samples == 0) fail(ErrorCode::domain, "need at least one sample");
  const Circulant c = checked_circulant(u, torus_size);
  const auto side = static_cast<std::size_t>(torus_size);
  const std::size_t im0 = torus_position(m0, side), in0 = torus_position(n0, side);
  // Row n0 of C⁻¹: ω_{n0} = Σ_m y_m ω̃_m.
  std::vector<double> e(c.size(), 0.0);
  e[in0] = 1.0;
  const auto y = c.solve(e, true);

  TransportCheck t;
  t.slope = y[im0];
  t.samples = samples;
  t.predicted_width = (law.upper() - law.lower()) / std::abs(t.slope);
  t.observed_min = std::numeric_limits<double>::infinity();
  t.observed_max = -std::numeric_limits<double>::infinity();
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> omega(c.size()), tilde(c.size());
  const double zlo = std::min(law.lower() / t.slope, law.upper() / t.slope);
  const double zhi = std::max(law.lower() / t.slope, law.upper() / t.slope);
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(seed, s);
    for (auto& w : omega) w = law.sample(rng);
    c.apply(omega, tilde, false);
    double rest = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m)
      if (m != im0) rest += y[m] * tilde[m];
    t.max_identity_error = std::max(t.max_identity_error, std::abs(omega[in0] - (t.slope * tilde[im0] + rest)));
    // Conditional variable: ω̃_{m0} re-centred by the contribution of the others.
    const double z = tilde[im0] + rest / t.slope;
    t.observed_min = std::min(t.observed_min, z);
    t.observed_max = std::max(t.observed_max, z);
    auto b = static_cast<long long>(std::floor((z - zlo) / (zhi - zlo) * bins));
    b = std::clamp<long long>(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  for (int b = 0; b < bins; ++b) {
    const double z0 = zlo + (zhi - zlo) * b / bins, z1 = zlo + (zhi - zlo) * (b + 1) / bins;
    const double p = std::abs(law.cdf(t.slope * z1) - law.cdf(t.slope * z0));
    const double expected = p * static_cast<double>(samples);
    if (expected <= 0.0) continue;
    t.chi_square += (counts[static_cast<std::size_t>(b)] - expected) * (counts[static_cast<std::size_t>(b)] - expected) / expected;
    ++t.degrees_of_freedom;
  }
  t.degrees_of_freedom -= 1;
  t.p_value = t.degrees_of_freedom > 0 ? boost::math::gamma_q(0.5 * t.degrees_of_freedom, 0.5 * t.chi_square) : 1.0;
  return t;
}

std::string wiener_report_json(const SingleSitePotential& u, const WienerData& data) {
  nlohmann::json j;
  j["potential"] = u.name();
  j["dimension"] = data.dimension;
  j["grid"] = data.grid;
  j["grid_history"] = data.grid_history;
  j["converged"] = data.converged;
  j["inverse_change"] = data.inverse_change;
  j["min_abs_multiplier"] = data.min_abs_multiplier;
  j["max_abs_multiplier"] = data.max_abs_multiplier;
  std::vector<int> k(static_cast<std::size_t>(data.dimension));
  for (int a = 0; a < data.dimension; ++a) k[static_cast<std::size_t>(a)] = data.k[a];
  j["k"] = k;
  j["a"] = data.a;
  j["a_tilde"] = data.a_tilde;
  j["kappa"] = data.kappa;
  j["kappa_remainder"] = data.kappa_remainder;
  j["pairing_sum"] = data.pairing_sum;
  j["identity_error"] = data.identity_error;
  const int rmax = static_cast<int>(std::min<std::size_t>(data.grid / 2 - 1, 64));
  std::vector<double> profile(static_cast<std::size_t>(rmax + 1), 0.0);
  for_each_in_cube(data.dimension, rmax, [&](const Site& s) {
    auto& p = profile[static_cast<std::size_t>(s.max_norm())];
    p = std::max(p, std::abs(data.inverse_at(s)));
  });
  j["inverse_decay_profile"] = profile;
  return j.dump(2);
}

}  // namespace alloy
