#include "alloylab/operator.hpp"

#include <cmath>
#include <iomanip>

#include "alloylab/error.hpp"

namespace alloy {

double HamiltonianMatrix::norm_bound() const {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a[i * n + j]);
    best = std::max(best, s);
  }
  return best;
}

double HamiltonianMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) t += a[i * n + i];
  return t;
}

double HamiltonianMatrix::frobenius_squared() const {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

std::vector<double> HamiltonianMatrix::diagonal() const {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
  return d;
}

namespace {

HamiltonianMatrix build(const CorrelatedPotential& v, double coupling, const PeriodicBox& box) {
  if (!(coupling > 0.0)) fail(ErrorCode::domain, "coupling must be positive");
  if (!v.box.contains(box)) fail(ErrorCode::geometry, "box is not contained in the potential's box");
  HamiltonianMatrix h;
  h.box = box;
  h.n = box.volume();
  h.coupling = coupling;
  h.provenance = v.profile_name + " seed=" + std::to_string(v.seed) + " trial=" + std::to_string(v.trial);
  h.a.assign(h.n * h.n, 0.0);
  const bool same = v.box == box;
  for (std::size_t i = 0; i < h.n; ++i) {
    const std::size_t src = same ? i : v.box.index(box.site(i));
    h(i, i) = coupling * v.values[src];
    for (std::size_t j : box.neighbours(i)) h(i, j) = -1.0;
  }
  return h;
}

}  // namespace

HamiltonianMatrix assemble(const CorrelatedPotential& v, double coupling, const PeriodicBox& box) {
  if (!(v.box == box)) fail(ErrorCode::geometry, "potential is not defined on the requested box");
  return build(v, coupling, box);
}

HamiltonianMatrix assemble(const CorrelatedPotential& v, double coupling) { return build(v, coupling, v.box); }

HamiltonianMatrix restrict(const CorrelatedPotential& v, double coupling, const PeriodicBox& cube) {
  return build(v, coupling, cube);
}

HamiltonianMatrix rank_one_shift(const HamiltonianMatrix& h, std::size_t site_index, double t) {
  if (site_index >= h.n) fail(ErrorCode::index, "site outside the Hamiltonian's box");
  HamiltonianMatrix out = h;
  out(site_index, site_index) += t;
  return out;
}

HamiltonianMatrix rank_one_shift(const HamiltonianMatrix& h, const Site& site, double t) {
  if (!h.box.contains(site)) fail(ErrorCode::index, "site " + site.to_string() + " outside the box");
  return rank_one_shift(h, h.box.index(site), t);
}

void write_triplets(const HamiltonianMatrix& h, std::ostream& out) {
  out << "# n " << h.n << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < h.n; ++i)
    for (std::size_t j = i; j < h.n; ++j)
      if (h(i, j) != 0.0) out << i << ' ' << j << ' ' << h(i, j) << '\n';
}

}  // namespace alloy
