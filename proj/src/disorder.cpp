#include "alloylab/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "alloylab/error.hpp"

namespace alloy {

namespace {

constexpr std::size_t kShellPointBudget = 4'000'000;

// Visits every site of max-norm exactly r in dimension d.
template <class F>
void for_each_shell_site(int d, int r, F&& f) {
  Site x(d);
  if (r == 0) {
    f(x);
    return;
  }
  // Odometer over the first d-1 coordinates; the last coordinate spans the
  // full range only when an earlier coordinate already sits on the shell.
  for (int k = 0; k < d - 1; ++k) x[k] = -r;
  while (true) {
    bool on_shell = false;
    for (int k = 0; k < d - 1; ++k) on_shell = on_shell || std::abs(x[k]) == r;
    if (on_shell) {
      for (int t = -r; t <= r; ++t) {
        x[d - 1] = t;
        f(x);
      }
    } else {
      x[d - 1] = -r;
      f(x);
      x[d - 1] = r;
      f(x);
    }
    int k = 0;
    for (; k < d - 1; ++k) {
      if (x[k] < r) {
        ++x[k];
        break;
      }
      x[k] = -r;
    }
    if (k == d - 1) break;
  }
}

std::size_t shell_size(int d, int r) {
  if (r == 0) return 1;
  double outer = std::pow(2.0 * r + 1.0, d);
  double inner = std::pow(2.0 * r - 1.0, d);
  return static_cast<std::size_t>(outer - inner);
}

struct NonZero {
  Site offset;
  double value;
};

std::vector<NonZero> nonzeros(const SingleSitePotential& u) {
  std::vector<NonZero> out;
  const auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0.0) out.push_back({u.support().site(i), c[i]});
  return out;
}

std::vector<double> dense_coefficients(const PeriodicBox& support, const Profile& profile) {
  std::vector<double> c(support.volume());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = profile(support.site(i));
  return c;
}

// Smallest radius whose l1 tail (by shell summation of the profile) is below
// 1e-10 of the l1 norm, or the dimension cap.
int storage_rule_radius(int d, const Profile& profile) {
  const int cap = storage_radius_cap(d);
  std::vector<double> shells;
  double total = 0.0;
  std::size_t budget = 0;
  for (int r = 0; budget < kShellPointBudget; ++r) {
    double s = 0.0;
    for_each_shell_site(d, r, [&](const Site& x) { s += std::abs(profile(x)); });
    budget += shell_size(d, r);
    shells.push_back(s);
    total += s;
    if (r > cap + 8 && s < 1e-18 * total) break;
  }
  double tail = 0.0;
  for (int r = static_cast<int>(shells.size()) - 1; r >= 0; --r) {
    if (tail >= 1e-10 * total) return std::min(cap, r + 1);
    tail += shells[static_cast<std::size_t>(r)];
  }
  return 0;
}

}  // namespace

SingleSitePotential::SingleSitePotential(int dimension, int radius, std::vector<double> coefficients,
                                         DecayInfo decay, Profile profile, std::string name)
    : radius_(radius), coeffs_(std::move(coefficients)), decay_(decay), profile_(std::move(profile)),
      name_(std::move(name)) {
  if (radius < 0) fail(ErrorCode::invalid_potential, "stored radius must be non-negative");
  support_ = make_box(dimension, radius);
  if (coeffs_.size() != support_.volume())
    fail(ErrorCode::invalid_potential, "coefficient array does not match the stored radius");
  for (double v : coeffs_)
    if (!std::isfinite(v)) fail(ErrorCode::invalid_potential, "non-finite coefficient");
  if (decay_.kind != DecayKind::compact && !(decay_.exponent > 0.0))
    fail(ErrorCode::invalid_potential, "decay exponent must be positive");
}

double SingleSitePotential::at(const Site& n) const {
  if (!support_.contains(n)) return 0.0;
  return coeffs_[support_.index(n)];
}

double SingleSitePotential::profile_at(const Site& n) const {
  if (profile_) return profile_(n);
  return at(n);
}

double SingleSitePotential::l1_norm() const {
  double s = 0.0;
  for (double v : coeffs_) s += std::abs(v);
  return s;
}

bool SingleSitePotential::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double v) { return v == 0.0; });
}

double SingleSitePotential::stored_tail_sum(int from, int p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    if (support_.site(i).max_norm() >= from) s += std::pow(std::abs(coeffs_[i]), p);
  }
  return s;
}

double SingleSitePotential::beyond_storage_sum(int p) const {
  // Only the shells r > stored radius are summed here.
  if (decay_.kind == DecayKind::compact) return 0.0;
  const int d = dimension();
  const double c = profile_ ? 0.0 : decay_constant();
  auto shell = [&](int r) {
    if (profile_) {
      double s = 0.0;
      for_each_shell_site(d, r, [&](const Site& x) { s += std::pow(std::abs(profile_(x)), p); });
      return s;
    }
    if (decay_.kind != DecayKind::power) return 0.0;
    return static_cast<double>(shell_size(d, r)) * std::pow(c * std::pow(r, -decay_.exponent), p);
  };
  double total = 0.0;
  std::size_t budget = 0;
  int r = radius_ + 1;
  double last = 0.0;
  int quiet = 0;
  for (; budget < kShellPointBudget; ++r) {
    last = shell(r);
    total += last;
    budget += shell_size(d, r);
    if (decay_.kind == DecayKind::exponential) {
      quiet = (last <= 1e-18 * total || last == 0.0) ? quiet + 1 : 0;
      if (quiet >= 3) return total;
    }
  }
  if (decay_.kind == DecayKind::power) {
    // Integral remainder of shells decaying like r^{d-1-pα}.
    const double excess = p * decay_.exponent - d;
    if (excess <= 0.0) return std::numeric_limits<double>::infinity();
    total += last * (r - 1) / excess;
  }
  return total;
}

double SingleSitePotential::tail_sum(int from, int p) const {
  double s = stored_tail_sum(from, p);
  if (from <= radius_ + 1) return s + beyond_storage_sum(p);
  if (decay_.kind == DecayKind::compact) return s;
  // Tail starting past the stored radius: shift a temporary view.
  SingleSitePotential shifted(dimension(), 0, {0.0}, decay_, profile_);
  shifted.radius_ = from - 1;
  if (!profile_) {
    shifted.profile_ = [c = decay_constant(), a = decay_.exponent](const Site& x) {
      return c * std::pow(static_cast<double>(x.max_norm()), -a);
    };
  }
  return shifted.beyond_storage_sum(p);
}

double SingleSitePotential::decay_constant() const {
  if (decay_.kind != DecayKind::power) return 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const Site n = support_.site(i);
    const int r = n.max_norm();
    if (r == 0) continue;
    c = std::max(c, std::abs(coeffs_[i]) * std::pow(static_cast<double>(r), decay_.exponent));
  }
  return c;
}

int storage_radius_cap(int dimension) {
  switch (dimension) {
    case 1: return 2000;
    case 2: return 64;
    case 3: return 16;
    default: return 6;
  }
}

SingleSitePotential delta_potential(int dimension) {
  return SingleSitePotential(dimension, 0, {1.0}, {DecayKind::compact, 0.0}, {}, "delta");
}

SingleSitePotential geometric_potential(int dimension, double ratio, int radius) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::invalid_potential, "geometric ratio must lie in (0,1)");
  Profile profile = [ratio, dimension](const Site& n) {
    int l1 = 0;
    for (int k = 0; k < dimension; ++k) l1 += std::abs(n[k]);
    return std::pow(ratio, l1);
  };
  if (radius < 0) radius = storage_rule_radius(dimension, profile);
  const auto support = make_box(dimension, radius);
  std::ostringstream name;
  name << "geometric(r=" << ratio << ")";
  return SingleSitePotential(dimension, radius, dense_coefficients(support, profile),
                             {DecayKind::exponential, -std::log(ratio)}, profile, name.str());
}

SingleSitePotential power_potential(int dimension, double exponent, int radius) {
  if (!(exponent > 0.0)) fail(ErrorCode::invalid_potential, "power exponent must be positive");
  Profile profile = [exponent](const Site& n) { return std::pow(1.0 + n.euclidean_norm(), -exponent); };
  if (radius < 0) radius = storage_rule_radius(dimension, profile);
  const auto support = make_box(dimension, radius);
  std::ostringstream name;
  name << "power(p=" << exponent << ")";
  return SingleSitePotential(dimension, radius, dense_coefficients(support, profile),
                             {DecayKind::power, exponent}, profile, name.str());
}

SingleSitePotential nearest_neighbour_potential(int dimension, double centre, double neighbour) {
  const auto support = make_box(dimension, 1);
  std::vector<double> c(support.volume(), 0.0);
  const Site origin(dimension);
  c[support.index(origin)] = centre;
  for (int k = 0; k < dimension; ++k) {
    Site e(dimension);
    e[k] = 1;
    c[support.index(e)] = neighbour;
    e[k] = -1;
    c[support.index(e)] = neighbour;
  }
  return SingleSitePotential(dimension, 1, std::move(c), {DecayKind::compact, 0.0}, {}, "nearest-neighbour");
}

SingleSitePotential truncate(const SingleSitePotential& u, int radius) {
  if (radius < 0) fail(ErrorCode::domain, "truncation radius must be non-negative");
  const int r = std::min(radius, u.radius());
  const auto support = make_box(u.dimension(), r);
  std::vector<double> c(support.volume());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = u.at(support.site(i));
  return SingleSitePotential(u.dimension(), r, std::move(c), {DecayKind::compact, 0.0}, {},
                             u.name() + "|trunc" + std::to_string(radius));
}

std::complex<double> multiplier(const SingleSitePotential& u, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != u.dimension()) fail(ErrorCode::domain, "theta dimension mismatch");
  std::complex<double> m = 0.0;
  const auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    const Site n = u.support().site(i);
    double phase = 0.0;
    for (int k = 0; k < u.dimension(); ++k) phase += n[k] * theta[static_cast<std::size_t>(k)];
    m += c[i] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return m;
}

DecayFit fit_decay(const SingleSitePotential& u) {
  DecayFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  const auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    const double r = u.support().site(i).euclidean_norm();
    if (r < 1.0) continue;
    const double x = std::log(r);
    const double y = std::log(std::abs(c[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  fit.points = n;
  const double den = n * sxx - sx * sx;
  if (n < 2 || std::abs(den) < 1e-300) return fit;
  const double slope = (n * sxy - sx * sy) / den;
  fit.valid = true;
  fit.exponent = -slope;
  fit.log_prefactor = (sy - slope * sx) / n;
  return fit;
}

namespace {

struct GridPoint {
  std::vector<double> theta;
  double value;
};

double abs_multiplier(const std::vector<NonZero>& nz, const std::vector<double>& theta) {
  std::complex<double> m = 0.0;
  for (const auto& t : nz) {
    double phase = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) phase += t.offset[static_cast<int>(k)] * theta[k];
    m += t.value * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return std::abs(m);
}

// Repeated 9^d sub-grid search around a grid minimum.
GridPoint zoom(const std::vector<NonZero>& nz, GridPoint start, double half_width) {
  const std::size_t d = start.theta.size();
  GridPoint best = start;
  double w = half_width;
  while (w > 1e-15) {
    const GridPoint centre = best;
    std::vector<int> odo(d, -4);
    while (true) {
      std::vector<double> th(d);
      for (std::size_t k = 0; k < d; ++k) th[k] = centre.theta[k] + odo[k] * (w / 4.0);
      const double v = abs_multiplier(nz, th);
      if (v < best.value) best = {th, v};
      std::size_t k = 0;
      for (; k < d; ++k) {
        if (odo[k] < 4) {
          ++odo[k];
          break;
        }
        odo[k] = -4;
      }
      if (k == d) break;
    }
    w /= 4.0;
  }
  return best;
}

}  // namespace

AssumptionReport check_assumptions(const SingleSitePotential& u, int grid_points, double tolerance) {
  if (u.is_zero()) fail(ErrorCode::invalid_potential, "potential has no non-zero coefficient");
  if (grid_points < 64) fail(ErrorCode::domain, "need at least 64 grid points per axis");
  const int d = u.dimension();
  const auto nz = nonzeros(u);

  AssumptionReport rep;
  rep.tolerance = tolerance;
  rep.l1_norm = u.l1_norm();
  rep.passes_s = std::isfinite(rep.l1_norm);
  rep.fit = fit_decay(u);
  rep.storage_tail_l1 = u.tail_sum(u.radius() + 1, 1);

  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(grid_points);
  const double step = 2.0 * std::numbers::pi / grid_points;
  std::vector<double> values(total);
  rep.max_multiplier = 0.0;
  for (std::size_t g = 0; g < total; ++g) {
    std::vector<double> th(static_cast<std::size_t>(d));
    std::size_t rest = g;
    for (int k = 0; k < d; ++k) {
      th[static_cast<std::size_t>(k)] = step * static_cast<double>(rest % static_cast<std::size_t>(grid_points));
      rest /= static_cast<std::size_t>(grid_points);
    }
    values[g] = abs_multiplier(nz, th);
    rep.max_multiplier = std::max(rep.max_multiplier, values[g]);
  }

  // Local minima of the periodic grid, lowest first.
  const PeriodicBox grid(d, grid_points, Site(d));
  std::vector<std::size_t> minima;
  for (std::size_t g = 0; g < total; ++g) {
    bool is_min = true;
    for (std::size_t nb : grid.neighbours(g))
      if (values[nb] < values[g]) {
        is_min = false;
        break;
      }
    if (is_min) minima.push_back(g);
  }
  std::sort(minima.begin(), minima.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  if (minima.size() > 8) minima.resize(8);

  GridPoint best{{}, std::numeric_limits<double>::infinity()};
  for (std::size_t g : minima) {
    GridPoint start;
    start.theta.resize(static_cast<std::size_t>(d));
    std::size_t rest = g;
    for (int k = 0; k < d; ++k) {
      start.theta[static_cast<std::size_t>(k)] =
          step * static_cast<double>(rest % static_cast<std::size_t>(grid_points));
      rest /= static_cast<std::size_t>(grid_points);
    }
    start.value = values[g];
    const auto refined = zoom(nz, start, step);
    if (refined.value < best.value) best = refined;
  }
  for (auto& t : best.theta) {
    t = std::fmod(t, 2.0 * std::numbers::pi);
    if (t < 0) t += 2.0 * std::numbers::pi;
  }
  rep.min_multiplier = best.value;
  rep.argmin = best.theta;
  rep.passes_h = rep.min_multiplier > tolerance;
  switch (u.decay().kind) {
    case DecayKind::compact:
    case DecayKind::exponential: rep.passes_d = true; break;
    case DecayKind::power: rep.passes_d = u.decay().exponent > d - 0.5; break;
  }
  return rep;
}

DisorderLaw::DisorderLaw(std::vector<double> edges, std::vector<double> weights)
    : edges_(std::move(edges)), weights_(std::move(weights)) {
  if (edges_.size() < 2 || weights_.size() + 1 != edges_.size())
    fail(ErrorCode::domain, "piecewise law needs m+1 edges and m weights");
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(edges_[i + 1] > edges_[i]) || !std::isfinite(edges_[i]) || !std::isfinite(edges_[i + 1]))
      fail(ErrorCode::domain, "law edges must be finite and strictly increasing");
    if (!(weights_[i] >= 0.0)) fail(ErrorCode::domain, "law weights must be non-negative");
    total += weights_[i];
  }
  if (!(total > 0.0)) fail(ErrorCode::domain, "law weights must not all vanish");
  cumulative_.assign(1, 0.0);
  for (auto& w : weights_) {
    w /= total;
    cumulative_.push_back(cumulative_.back() + w);
  }
  cumulative_.back() = 1.0;
}

DisorderLaw DisorderLaw::uniform(double lo, double hi) { return DisorderLaw({lo, hi}, {1.0}); }

DisorderLaw DisorderLaw::piecewise(std::vector<double> edges, std::vector<double> weights) {
  return DisorderLaw(std::move(edges), std::move(weights));
}

double DisorderLaw::cdf(double x) const {
  if (x <= edges_.front()) return 0.0;
  if (x >= edges_.back()) return 1.0;
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto i = static_cast<std::size_t>(it - edges_.begin()) - 1;
  return cumulative_[i] + weights_[i] * (x - edges_[i]) / (edges_[i + 1] - edges_[i]);
}

double DisorderLaw::sample(Rng& rng) const {
  const double p = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), p);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  i = std::clamp<std::size_t>(i, 1, weights_.size()) - 1;
  while (weights_[i] == 0.0 && i + 1 < weights_.size()) ++i;
  const double frac = (p - cumulative_[i]) / weights_[i];
  return edges_[i] + std::clamp(frac, 0.0, 1.0) * (edges_[i + 1] - edges_[i]);
}

double DisorderLaw::concentration(double s) const {
  if (s <= 0.0) return 0.0;
  double best = 0.0;
  for (double e : edges_) {
    best = std::max(best, cdf(e + s) - cdf(e));
    best = std::max(best, cdf(e) - cdf(e - s));
  }
  return std::min(best, 1.0);
}

double DisorderLaw::lipschitz_constant() const {
  double c = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) c = std::max(c, weights_[i] / (edges_[i + 1] - edges_[i]));
  return c;
}

double DisorderLaw::essential_bound() const {
  std::size_t first = 0, last = weights_.size() - 1;
  while (weights_[first] == 0.0) ++first;
  while (weights_[last] == 0.0) --last;
  return std::max(std::abs(edges_[first]), std::abs(edges_[last + 1]));
}

double DisorderLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) m += weights_[i] * 0.5 * (edges_[i] + edges_[i + 1]);
  return m;
}

double DisorderLaw::variance() const {
  double m2 = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double a = edges_[i], b = edges_[i + 1];
    m2 += weights_[i] * (a * a + a * b + b * b) / 3.0;
  }
  const double m = mean();
  return m2 - m * m;
}

DisorderRealization sample_disorder(const PeriodicBox& box, const DisorderLaw& law, std::uint64_t seed,
                                    std::uint64_t trial, int margin, std::uint64_t stream) {
  DisorderRealization r;
  r.box = enlarge(box, margin);
  r.seed = seed;
  r.trial = trial;
  Rng rng(seed, trial, stream);
  r.values.resize(r.box.volume());
  for (auto& v : r.values) v = law.sample(rng);
  return r;
}

double CorrelatedPotential::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

CorrelatedPotential correlate(const DisorderRealization& omega, const SingleSitePotential& u,
                              const PeriodicBox& target) {
  if (omega.box.dimension() != target.dimension() || u.dimension() != target.dimension())
    fail(ErrorCode::geometry, "dimension mismatch between disorder, potential and target box");
  if (!omega.box.contains(enlarge(target, u.radius())))
    fail(ErrorCode::geometry, "disorder field does not cover the target box enlarged by the potential radius " +
                                  std::to_string(u.radius()));
  const int d = target.dimension();
  const auto S = static_cast<std::ptrdiff_t>(omega.box.side());
  struct Term {
    std::ptrdiff_t offset;
    double value;
  };
  std::vector<Term> terms;
  for (const auto& nz : nonzeros(u)) {
    std::ptrdiff_t off = 0, stride = 1;
    for (int k = 0; k < d; ++k) {
      off += nz.offset[k] * stride;
      stride *= S;
    }
    terms.push_back({off, nz.value});
  }
  CorrelatedPotential v;
  v.box = target;
  v.profile_name = u.name();
  v.profile_radius = u.radius();
  v.seed = omega.seed;
  v.trial = omega.trial;
  v.values.resize(target.volume());
  for (std::size_t i = 0; i < target.volume(); ++i) {
    const auto base = static_cast<std::ptrdiff_t>(omega.box.index(target.site(i)));
    double s = 0.0;
    for (const auto& t : terms) s += t.value * omega.values[static_cast<std::size_t>(base - t.offset)];
    v.values[i] = s;
  }
  return v;
}

TailReport tail_bounds(const SingleSitePotential& u, int from, double epsilon, int half_side,
                       double disorder_bound) {
  if (!(epsilon > 0.0)) fail(ErrorCode::domain, "epsilon must be positive");
  if (from < 1) fail(ErrorCode::domain, "tail start must be positive");
  if (half_side < 1) fail(ErrorCode::domain, "box half-side must be positive");
  if (!(disorder_bound > 0.0)) fail(ErrorCode::domain, "disorder bound must be positive");
  TailReport t;
  t.from = from;
  t.epsilon = epsilon;
  t.l2_tail = u.tail_sum(from, 2);
  t.l1_tail = u.tail_sum(from, 1);
  t.threshold = epsilon * std::pow(static_cast<double>(half_side), -u.dimension());
  const double c2 = disorder_bound * disorder_bound;
  t.linear_constant = 2.0 * c2;
  if (t.l2_tail > 0.0) {
    t.linear_bound = std::exp(-t.threshold / (t.linear_constant * t.l2_tail));
    t.hoeffding_bound = std::min(1.0, 2.0 * std::exp(-t.threshold * t.threshold / (2.0 * c2 * t.l2_tail)));
  }
  return t;
}

double decorrelation_exponent(int dimension, double decay_exponent, double beta_prime) {
  return -dimension + (2.0 * decay_exponent - dimension + 1.0) * beta_prime;
}

SingleSitePotential parse_potential(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("potential file is not valid JSON: ") + e.what());
  }
  try {
    const int d = j.at("dimension").get<int>();
    if (d < 1 || d > kMaxDimension) fail(ErrorCode::invalid_potential, "bad dimension");
    DecayInfo decay;
    if (j.contains("decay")) {
      const auto kind = j["decay"].at("kind").get<std::string>();
      if (kind == "compact") {
        decay.kind = DecayKind::compact;
      } else if (kind == "power") {
        decay.kind = DecayKind::power;
        decay.exponent = j["decay"].at("exponent").get<double>();
      } else {
        fail(ErrorCode::invalid_potential, "decay kind must be 'compact' or 'power'");
      }
    }
    const auto& list = j.at("coefficients");
    if (!list.is_array() || list.empty()) fail(ErrorCode::invalid_potential, "empty coefficient list");
    std::vector<std::pair<Site, double>> entries;
    int radius = 0;
    for (const auto& e : list) {
      const auto off = e.at("offset").get<std::vector<int>>();
      if (static_cast<int>(off.size()) != d) fail(ErrorCode::invalid_potential, "offset dimension mismatch");
      Site s(d);
      for (int k = 0; k < d; ++k) s[k] = off[static_cast<std::size_t>(k)];
      radius = std::max(radius, s.max_norm());
      entries.emplace_back(s, e.at("value").get<double>());
    }
    const auto support = make_box(d, radius);
    std::vector<double> c(support.volume(), 0.0);
    std::vector<bool> seen(support.volume(), false);
    for (const auto& [s, v] : entries) {
      const auto i = support.index(s);
      if (seen[i]) fail(ErrorCode::invalid_potential, "duplicate offset " + s.to_string());
      seen[i] = true;
      c[i] = v;
    }
    SingleSitePotential u(d, radius, std::move(c), decay, {}, j.value("name", std::string("file")));
    if (u.is_zero()) fail(ErrorCode::invalid_potential, "potential has no non-zero coefficient");
    return u;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_potential, std::string("malformed potential: ") + e.what());
  }
}

SingleSitePotential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open potential file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_potential(ss.str());
}

std::string potential_to_json(const SingleSitePotential& u) {
  nlohmann::json j;
  j["name"] = u.name();
  j["dimension"] = u.dimension();
  if (u.decay().kind == DecayKind::power)
    j["decay"] = {{"kind", "power"}, {"exponent", u.decay().exponent}};
  else
    j["decay"] = {{"kind", "compact"}};
  auto list = nlohmann::json::array();
  const auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    const Site s = u.support().site(i);
    std::vector<int> off(static_cast<std::size_t>(u.dimension()));
    for (int k = 0; k < u.dimension(); ++k) off[static_cast<std::size_t>(k)] = s[k];
    list.push_back({{"offset", off}, {"value", c[i]}});
  }
  j["coefficients"] = list;
  return j.dump(2);
}

}  // namespace alloy
