#include "alloylab/eig.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "alloylab/error.hpp"
#include "alloylab/rng.hpp"

namespace alloy {

std::span<const double> Spectrum::vector(std::size_t j) const {
  if (!has_vectors()) fail(ErrorCode::domain, "spectrum has no eigenvectors");
  if (j >= values.size()) fail(ErrorCode::index, "eigenvector index out of range");
  return {vectors.data() + j * dim, dim};
}

namespace {

constexpr int kMaxQlIterations = 60;

// Householder reduction of the symmetric matrix held in v (column-major,
// accessed as V(r, c)) to tridiagonal form; d/e receive the diagonal and
// sub-diagonal. With `accumulate`, v ends up holding the orthogonal
// transformation with columns stored contiguously.
void householder(std::vector<double>& v, std::size_t n, std::vector<double>& d, std::vector<double>& e,
                 bool accumulate) {
  auto V = [&](std::size_t r, std::size_t c) -> double& { return v[c * n + r]; };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = V(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
        V(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        V(j, i) = f;
        g = e[j] + V(j, j) * f;
        const double* col = &V(0, j);
        for (std::size_t k = j + 1; k + 1 <= i; ++k) {
          g += col[k] * d[k];
          e[k] += col[k] * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        double* col = &V(0, j);
        for (std::size_t k = j; k + 1 <= i; ++k) col[k] -= (f * e[k] + g * d[k]);
        d[j] = V(i - 1, j);
        V(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) d[j] = V(j, j);
    e[0] = 0.0;
    return;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    V(n - 1, i) = V(i, i);
    V(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      const double* ci = &V(0, i + 1);
      for (std::size_t k = 0; k <= i; ++k) d[k] = ci[k] / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double* cj = &V(0, j);
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += ci[k] * cj[k];
        for (std::size_t k = 0; k <= i; ++k) cj[k] -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = V(n - 1, j);
    V(n - 1, j) = 0.0;
  }
  V(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

}  // namespace

void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>* z, std::size_t n) {
  if (n == 0) return;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const double eps = std::ldexp(1.0, -52);
  double f = 0.0, tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations) {
          double worst = 0.0;
          for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(e[i]));
          throw NonConvergenceError("implicit QL did not converge for eigenvalue " + std::to_string(l), worst);
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (z) {
            double* zi = z->data() + ii * n;
            double* zj = zi + n;
            for (std::size_t k = 0; k < n; ++k) {
              const double hk = zj[k];
              zj[k] = s * zi[k] + c * hk;
              zi[k] = c * zi[k] - s * hk;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < n; ++j) sorted[j] = d[order[j]];
  d.swap(sorted);
  if (z) {
    std::vector<double> zs(n * n);
    for (std::size_t j = 0; j < n; ++j)
      std::copy_n(z->data() + order[j] * n, n, zs.data() + j * n);
    z->swap(zs);
  }
}

namespace {

double residual_norm(const HamiltonianMatrix& h, std::span<const double> v, double e) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.n; ++i) {
    const double* row = h.a.data() + i * h.n;
    double acc = -e * v[i];
    for (std::size_t j = 0; j < h.n; ++j) acc += row[j] * v[j];
    s += acc * acc;
  }
  return std::sqrt(s);
}

Spectrum dense(const HamiltonianMatrix& h, bool want_vectors) {
  Spectrum sp;
  sp.box = h.box;
  sp.dim = h.n;
  sp.norm_bound = h.norm_bound();
  if (h.n == 0) return sp;
  std::vector<double> v = h.a;
  std::vector<double> d, e;
  householder(v, h.n, d, e, want_vectors);
  tridiagonal_ql(d, e, want_vectors ? &v : nullptr, h.n);
  sp.values = std::move(d);
  if (want_vectors) {
    sp.vectors = std::move(v);
    for (std::size_t j = 0; j < h.n; ++j)
      sp.max_residual = std::max(sp.max_residual, residual_norm(h, sp.vector(j), sp.values[j]));
  }
  return sp;
}

}  // namespace

Spectrum eigh(const HamiltonianMatrix& h) { return dense(h, true); }
Spectrum eigvalsh(const HamiltonianMatrix& h) { return dense(h, false); }

PeriodicChain::PeriodicChain(std::vector<double> diagonal, double hopping) : d_(std::move(diagonal)), t_(hopping) {
  if (d_.empty()) fail(ErrorCode::domain, "empty chain");
}

PeriodicChain PeriodicChain::from(const HamiltonianMatrix& h) {
  if (h.box.dimension() != 1) fail(ErrorCode::domain, "the chain solver needs a one-dimensional box");
  const std::size_t n = h.n;
  const double t = n >= 2 ? h(0, 1) : 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (h(i, i + 1) != t) fail(ErrorCode::domain, "matrix is not a periodic chain");
  if (n >= 3 && h(0, n - 1) != t) fail(ErrorCode::domain, "matrix is not a periodic chain");
  return PeriodicChain(h.diagonal(), t);
}

double PeriodicChain::norm_bound() const {
  const double hop = d_.size() >= 3 ? 2.0 * std::abs(t_) : (d_.size() == 2 ? std::abs(t_) : 0.0);
  double m = 0.0;
  for (double x : d_) m = std::max(m, std::abs(x));
  return m + hop;
}

void PeriodicChain::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = d_.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = d_[i] * x[i];
  if (n == 2) {
    y[0] += t_ * x[1];
    y[1] += t_ * x[0];
    return;
  }
  if (n < 3) return;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += t_ * x[(i + 1) % n];
    y[i] += t_ * x[(i + n - 1) % n];
  }
}

namespace {

// Inertia of a periodic chain shifted by e. Pivots whose magnitude falls
// below `pivmin` are replaced by -pivmin.
bool chain_inertia(const std::vector<double>& d, double t, double e, double pivmin, std::size_t& negatives) {
  const std::size_t n = d.size();
  std::size_t neg = 0;
  auto guard = [&](double p) { return std::abs(p) < pivmin ? -pivmin : p; };
  if (n == 1) {
    negatives = d[0] - e < 0 ? 1 : 0;
    return true;
  }
  if (n == 2) {
    const double p0 = guard(d[0] - e);
    const double p1 = guard(d[1] - e - t * t / p0);
    negatives = (p0 < 0) + (p1 < 0);
    return true;
  }
  // Eliminate nodes 0..n-2; node n-1 is the arrow coupled to node 0 (the
  // corner) and node n-2.
  double p = guard(d[0] - e);
  double g = t;
  double q = d[n - 1] - e - g * g / p;
  neg += p < 0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double gk = (k + 2 == n ? t : 0.0) - t * g / p;
    p = guard(d[k] - e - t * t / p);
    g = gk;
    q -= g * g / p;
    neg += p < 0;
  }
  if (!std::isfinite(q)) return false;
  q = guard(q);
  neg += q < 0;
  negatives = neg;
  return true;
}

}  // namespace

std::size_t PeriodicChain::count_below(double e) const {
  std::size_t neg = 0;
  if (chain_inertia(d_, t_, e, 1e-290, neg)) return neg;
  // A tiny replaced pivot overflowed the corner fill; use a coarser guard.
  if (chain_inertia(d_, t_, e, 1e-13 * (1.0 + norm_bound()), neg)) return neg;
  fail(ErrorCode::non_convergence, "chain inertia count overflowed");
}

std::vector<double> PeriodicChain::eigenvalues_in(double lo, double hi) const {
  std::vector<double> out;
  if (!(hi > lo)) return out;
  const std::size_t c_lo = count_below(lo);
  const std::size_t c_hi = count_below(hi);
  for (std::size_t j = c_lo; j < c_hi; ++j) {
    double left = lo, right = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (left + right);
      if (mid <= left || mid >= right) break;
      if (right - left <= 4e-16 * std::max(std::abs(left), std::abs(right))) break;
      if (count_below(mid) > j)
        right = mid;
      else
        left = mid;
    }
    out.push_back(0.5 * (left + right));
  }
  return out;
}

namespace {

// (H - sigma) for a periodic chain in the interleaved ordering 0, n-1, 1,
// n-2, ..., which is pentadiagonal; LU with partial pivoting in band storage.
class ChainBandLu {
 public:
  ChainBandLu(const std::vector<double>& d, double t, double sigma, double tiny)
      : n_(d.size()), rows_(n_), piv_(n_), pos_(n_), site_(n_) {
    for (std::size_t i = 0, p = 0; p < n_; ++i) {
      site_[p++] = i;
      if (p < n_) site_[p++] = n_ - 1 - i;
    }
    for (std::size_t p = 0; p < n_; ++p) pos_[site_[p]] = p;
    for (auto& r : rows_) r.fill(0.0);
    for (std::size_t i = 0; i < n_; ++i) at(pos_[i], pos_[i]) += d[i] - sigma;
    auto link = [&](std::size_t a, std::size_t b) {
      at(pos_[a], pos_[b]) += t;
      at(pos_[b], pos_[a]) += t;
    };
    if (n_ == 2) link(0, 1);
    if (n_ >= 3)
      for (std::size_t i = 0; i < n_; ++i) link(i, (i + 1) % n_);
    factor(tiny);
  }

  std::size_t site(std::size_t p) const { return site_[p]; }
  std::size_t position(std::size_t i) const { return pos_[i]; }

  // Solves in place; b is in interleaved order.
  void solve(std::vector<double>& b) const {
    for (std::size_t r = 0; r < n_; ++r) {
      std::swap(b[r], b[piv_[r]]);
      for (std::size_t i = r + 1; i < std::min(n_, r + 3); ++i) b[i] -= get(i, r) * b[r];
    }
    for (std::size_t r = n_; r-- > 0;) {
      double s = b[r];
      for (std::size_t c = r + 1; c < std::min(n_, r + 5); ++c) s -= get(r, c) * b[c];
      b[r] = s / get(r, r);
    }
  }

 private:
  double& at(std::size_t r, std::size_t c) { return rows_[r][c + 2 - r]; }
  double get(std::size_t r, std::size_t c) const { return rows_[r][c + 2 - r]; }

  void factor(double tiny) {
    for (std::size_t r = 0; r < n_; ++r) {
      const std::size_t last = std::min(n_, r + 3);
      std::size_t p = r;
      for (std::size_t i = r + 1; i < last; ++i)
        if (std::abs(get(i, r)) > std::abs(get(p, r))) p = i;
      piv_[r] = p;
      const std::size_t cend = std::min(n_, r + 5);
      if (p != r)
        for (std::size_t c = r; c < cend; ++c) std::swap(at(r, c), at(p, c));
      if (std::abs(get(r, r)) < tiny) at(r, r) = tiny;
      for (std::size_t i = r + 1; i < last; ++i) {
        const double m = get(i, r) / get(r, r);
        at(i, r) = m;
        if (m == 0.0) continue;
        for (std::size_t c = r + 1; c < cend; ++c) at(i, c) -= m * get(r, c);
      }
    }
  }

  std::size_t n_;
  std::vector<std::array<double, 7>> rows_;  // columns r-2 .. r+4
  std::vector<std::size_t> piv_, pos_, site_;
};

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> PeriodicChain::eigenvectors(std::span<const double> values) const {
  const std::size_t n = d_.size();
  const std::size_t m = values.size();
  std::vector<double> out(n * m, 0.0);
  const double scale = 1.0 + norm_bound();
  const double eps = std::ldexp(1.0, -52);
  const double cluster_gap = 1e-3 * scale;
  std::size_t cluster_start = 0;
  double prev_sigma = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    double sigma = values[j];
    if (j > 0 && values[j] - values[j - 1] > cluster_gap) cluster_start = j;
    // Coincident shifts would reproduce the same vector; nudge them apart.
    if (j > cluster_start && sigma - prev_sigma < 10.0 * eps * scale) sigma = prev_sigma + 10.0 * eps * scale;
    prev_sigma = sigma;
    const ChainBandLu lu(d_, t_, sigma, eps * scale);

    Rng rng(0x1f0e7c0ffeeULL, j);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (int it = 0; it < 4; ++it) {
      lu.solve(x);
      // Orthogonalise against earlier members of the cluster (in site order).
      for (std::size_t k = cluster_start; k < j; ++k) {
        const double* vk = out.data() + k * n;
        double dot = 0.0;
        for (std::size_t p = 0; p < n; ++p) dot += x[p] * vk[lu.site(p)];
        for (std::size_t p = 0; p < n; ++p) x[p] -= dot * vk[lu.site(p)];
      }
      const double nx = norm2(x);
      if (!(nx > 0.0) || !std::isfinite(nx)) fail(ErrorCode::non_convergence, "inverse iteration broke down");
      for (auto& v : x) v /= nx;
    }
    double* vj = out.data() + j * n;
    for (std::size_t p = 0; p < n; ++p) vj[lu.site(p)] = x[p];
    // Deterministic sign: largest-magnitude component positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(vj[i]) > std::abs(vj[arg])) arg = i;
    if (vj[arg] < 0)
      for (std::size_t i = 0; i < n; ++i) vj[i] = -vj[i];
  }
  return out;
}

Spectrum eigh_window(const HamiltonianMatrix& h, double lo, double hi, bool want_vectors, SolverKind solver) {
  if (lo > hi) fail(ErrorCode::domain, "window lower end exceeds upper end");
  if (solver == SolverKind::automatic) solver = h.box.dimension() == 1 ? SolverKind::chain : SolverKind::dense;
  Spectrum sp;
  if (solver == SolverKind::dense) {
    const Spectrum full = dense(h, want_vectors);
    sp.box = full.box;
    sp.dim = full.dim;
    sp.norm_bound = full.norm_bound;
    sp.max_residual = full.max_residual;
    for (std::size_t j = 0; j < full.values.size(); ++j) {
      const double e = full.values[j];
      if (e <= lo) {
        ++sp.below_window;
      } else if (e <= hi) {
        sp.values.push_back(e);
        if (want_vectors) {
          const auto v = full.vector(j);
          sp.vectors.insert(sp.vectors.end(), v.begin(), v.end());
        }
      }
    }
  } else {
    const PeriodicChain chain = PeriodicChain::from(h);
    sp.box = h.box;
    sp.dim = h.n;
    sp.norm_bound = chain.norm_bound();
    sp.below_window = std::isfinite(lo) ? chain.count_below(lo) : 0;
    const double b = sp.norm_bound + 1.0;
    sp.values = chain.eigenvalues_in(std::max(lo, -b), std::min(hi, b));
    if (want_vectors && !sp.values.empty()) {
      sp.vectors = chain.eigenvectors(sp.values);
      std::vector<double> y(sp.dim);
      for (std::size_t j = 0; j < sp.values.size(); ++j) {
        const auto v = sp.vector(j);
        chain.apply(v, y);
        double s = 0.0;
        for (std::size_t i = 0; i < sp.dim; ++i) s += (y[i] - sp.values[j] * v[i]) * (y[i] - sp.values[j] * v[i]);
        sp.max_residual = std::max(sp.max_residual, std::sqrt(s));
      }
    }
  }
  sp.window_lo = lo;
  sp.window_hi = hi;
  return sp;
}

std::size_t count_at_most(const HamiltonianMatrix& h, double e, SolverKind solver) {
  if (solver == SolverKind::automatic) solver = h.box.dimension() == 1 ? SolverKind::chain : SolverKind::dense;
  if (solver == SolverKind::chain) return PeriodicChain::from(h).count_below(e);
  const Spectrum sp = eigvalsh(h);
  return static_cast<std::size_t>(std::upper_bound(sp.values.begin(), sp.values.end(), e) - sp.values.begin());
}

std::size_t count_in(const Spectrum& spec, double a, double b) {
  if (a > b) fail(ErrorCode::domain, "interval lower end exceeds upper end");
  if (a == b) return 0;
  if (a < spec.window_lo || b > spec.window_hi)
    fail(ErrorCode::domain, "interval reaches outside the computed spectral window");
  const auto lo = std::upper_bound(spec.values.begin(), spec.values.end(), a);
  const auto hi = std::upper_bound(spec.values.begin(), spec.values.end(), b);
  return static_cast<std::size_t>(hi - lo);
}

double projector_diagonal(const Spectrum& spec, std::size_t site, double a, double b) {
  if (site >= spec.dim) fail(ErrorCode::index, "site outside the spectrum's box");
  if (a >= b) return 0.0;
  if (a < spec.window_lo || b > spec.window_hi)
    fail(ErrorCode::domain, "interval reaches outside the computed spectral window");
  double s = 0.0;
  for (std::size_t j = 0; j < spec.values.size(); ++j) {
    if (spec.values[j] <= a || spec.values[j] > b) continue;
    const double v = spec.vector(j)[site];
    s += v * v;
  }
  return s;
}

double projector_diagonal(const Spectrum& spec, const Site& site, double a, double b) {
  if (!spec.box.contains(site)) fail(ErrorCode::index, "site outside the spectrum's box");
  return projector_diagonal(spec, spec.box.index(site), a, b);
}

}  // namespace alloy
