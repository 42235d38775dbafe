#include <algorithm>
#include <cmath>
#include <numbers>

#include "alloylab/eig.hpp"
#include "alloylab/error.hpp"
#include "alloylab/operator.hpp"
#include "doctest.h"

using namespace alloy;

namespace {

HamiltonianMatrix random_hamiltonian(int d, int L, double lambda, std::uint64_t trial) {
  const auto box = make_box(d, L);
  const auto w = sample_disorder(box, DisorderLaw::uniform(), 23, trial);
  return assemble(correlate(w, delta_potential(d), box), lambda);
}

HamiltonianMatrix diagonal_chain(const std::vector<double>& diag) {
  const PeriodicBox box(1, static_cast<int>(diag.size()), Site{0});
  CorrelatedPotential v;
  v.box = box;
  v.values = diag;
  return assemble(v, 1.0);
}

// Roots of x^3 + b x^2 + c x + d with three real roots (trigonometric form).
std::vector<double> cubic_roots(double b, double c, double d) {
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double r = 2.0 * std::sqrt(-p / 3.0);
  const double phi = std::acos(std::clamp(3.0 * q / (p * r), -1.0, 1.0));
  std::vector<double> out;
  for (int k = 0; k < 3; ++k) out.push_back(r * std::cos((phi - 2.0 * std::numbers::pi * k) / 3.0) - b / 3.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("three-site periodic chain against the cubic formula") {
  // Matrix [[a,-1,-1],[-1,b,-1],[-1,-1,c]].
  const double a = 0.3, b = -1.1, c = 2.0;
  const auto s = eigvalsh(diagonal_chain({a, b, c}));
  // det(x - M) = x^3 - (a+b+c) x^2 + (ab+bc+ca-3) x - (abc - a - b - c - 2).
  const auto roots = cubic_roots(-(a + b + c), a * b + b * c + c * a - 3.0, -(a * b * c - a - b - c - 2.0));
  for (int k = 0; k < 3; ++k) CHECK(s.values[k] == doctest::Approx(roots[k]).epsilon(1e-12));
}

TEST_CASE("eigenpairs satisfy trace, Frobenius and orthonormality identities") {
  for (int d = 1; d <= 3; ++d) {
    const auto h = random_hamiltonian(d, d == 3 ? 2 : 4, 3.0, 1);
    const auto s = eigh(h);
    REQUIRE(s.complete());
    REQUIRE(std::is_sorted(s.values.begin(), s.values.end()));
    double tr = 0.0, fro = 0.0;
    for (double e : s.values) {
      tr += e;
      fro += e * e;
    }
    CHECK(tr == doctest::Approx(h.trace()).epsilon(1e-12));
    CHECK(fro == doctest::Approx(h.frobenius_squared()).epsilon(1e-12));
    CHECK(s.max_residual <= 1e-10 * (1.0 + s.norm_bound));
    for (std::size_t i = 0; i < s.dim; ++i)
      for (std::size_t j = i; j < s.dim; ++j) {
        double dot = 0.0;
        for (std::size_t x = 0; x < s.dim; ++x) dot += s.vector(i)[x] * s.vector(j)[x];
        REQUIRE(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
      }
  }
}

TEST_CASE("counts are additive over adjacent intervals") {
  const auto s = eigvalsh(random_hamiltonian(2, 5, 4.0, 2));
  for (double a : {-5.0, -1.0, 0.0})
    for (double m : {0.5, 1.5})
      for (double b : {2.0, 7.0}) CHECK(count_in(s, a, m + a) + count_in(s, m + a, b + a) == count_in(s, a, b + a));
  CHECK(count_in(s, -100.0, 100.0) == s.dim);
  CHECK(count_in(s, 1.0, 1.0) == 0);
}

TEST_CASE("spectral projectors are complete") {
  const auto s = eigh(random_hamiltonian(2, 3, 2.0, 3));
  for (std::size_t x = 0; x < s.dim; ++x) {
    CHECK(projector_diagonal(s, x, -100.0, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
    const double split = projector_diagonal(s, x, -100.0, 0.2) + projector_diagonal(s, x, 0.2, 100.0);
    CHECK(split == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("chain solver agrees with the dense solver") {
  for (std::uint64_t trial = 0; trial < 8; ++trial)
    for (double lambda : {0.5, 4.0, 10.0}) {
      const auto h = random_hamiltonian(1, 40, lambda, trial);
      const auto dense = eigh(h);
      const double lo = -1.0, hi = 1.3;
      const auto chain = eigh_window(h, lo, hi, true, SolverKind::chain);
      const auto dwin = eigh_window(h, lo, hi, true, SolverKind::dense);
      REQUIRE(chain.values.size() == count_in(dense, lo, hi));
      REQUIRE(dwin.values.size() == chain.values.size());
      CHECK(chain.below_window == count_in(dense, -1e9, lo));
      for (std::size_t j = 0; j < chain.values.size(); ++j) {
        REQUIRE(chain.values[j] == doctest::Approx(dwin.values[j]).epsilon(1e-11));
        // Vectors agree up to sign.
        double dot = 0.0;
        for (std::size_t x = 0; x < h.n; ++x) dot += chain.vector(j)[x] * dwin.vector(j)[x];
        REQUIRE(std::abs(std::abs(dot) - 1.0) <= 1e-8);
      }
      CHECK(chain.max_residual <= 1e-10 * (1.0 + chain.norm_bound));
      for (double e : {-3.0, -0.5, 0.0, 0.9, 5.0})
        CHECK(count_at_most(h, e, SolverKind::chain) == count_at_most(h, e, SolverKind::dense));
    }
}

TEST_CASE("chain solver handles tiny and degenerate chains") {
  // Free chain with exactly degenerate pairs. Inertia counts only resolve a
  // double root to about sqrt(machine epsilon).
  const auto h = diagonal_chain(std::vector<double>(12, 0.0));
  const auto w = eigh_window(h, -3.0, 3.0, true, SolverKind::chain);
  const auto d = eigh(h);
  REQUIRE(w.values.size() == 12);
  for (std::size_t j = 0; j < 12; ++j) CHECK(std::abs(w.values[j] - d.values[j]) <= 1e-7);
  CHECK(w.max_residual <= 1e-7);
  for (std::size_t n : {1u, 2u}) {
    const auto s = diagonal_chain(std::vector<double>(n, 0.5));
    const auto cw = eigh_window(s, -5.0, 5.0, false, SolverKind::chain);
    const auto dw = eigvalsh(s);
    REQUIRE(cw.values.size() == n);
    for (std::size_t j = 0; j < n; ++j) CHECK(cw.values[j] == doctest::Approx(dw.values[j]));
  }
}

TEST_CASE("windowed spectra refuse intervals outside the window") {
  const auto h = random_hamiltonian(1, 10, 1.0, 0);
  const auto w = eigh_window(h, 0.0, 1.0, false);
  CHECK_THROWS_AS((void)count_in(w, -1.0, 0.5), Error);
  CHECK(count_in(w, 0.0, 1.0) == w.values.size());
}

TEST_CASE("chain solver rejects non-chain matrices") {
  const auto h = random_hamiltonian(2, 2, 1.0, 0);
  CHECK_THROWS_AS((void)eigh_window(h, -1.0, 1.0, false, SolverKind::chain), Error);
}
