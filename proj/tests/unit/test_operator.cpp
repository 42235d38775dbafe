#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "alloylab/eig.hpp"
#include "alloylab/error.hpp"
#include "alloylab/operator.hpp"
#include "doctest.h"

using namespace alloy;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

CorrelatedPotential constant_potential(const PeriodicBox& box, double value) {
  CorrelatedPotential v;
  v.box = box;
  v.values.assign(box.volume(), value);
  v.profile_name = "constant";
  return v;
}

CorrelatedPotential random_potential(const PeriodicBox& box, std::uint64_t trial) {
  const auto u = delta_potential(box.dimension());
  const auto w = sample_disorder(box, DisorderLaw::uniform(), 17, trial);
  return correlate(w, u, box);
}

// Eigenvalues of the free periodic Laplacian: Σ_k -2 cos(2π j_k / s).
std::vector<double> free_spectrum(int d, int side) {
  std::vector<double> out;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(side);
  for (std::size_t g = 0; g < total; ++g) {
    std::size_t rest = g;
    double e = 0.0;
    for (int k = 0; k < d; ++k) {
      e -= 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(rest % side) / side);
      rest /= static_cast<std::size_t>(side);
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("free chain on three sites") {
  const auto box = make_box(1, 1);
  const auto h = assemble(constant_potential(box, 0.0), 1.0);
  CHECK(h.n == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(h(i, i) == 0.0);
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(h(i, j) == -1.0);
  }
  const auto s = eigvalsh(h);
  CHECK(s.values[0] == doctest::Approx(-2.0));
  CHECK(s.values[1] == doctest::Approx(1.0));
  CHECK(s.values[2] == doctest::Approx(1.0));
}

TEST_CASE("diagonal carries the scaled potential") {
  const auto box = make_box(2, 3);
  const auto v = random_potential(box, 0);
  const auto h = assemble(v, 4.0);
  for (std::size_t i = 0; i < h.n; ++i) CHECK(h(i, i) == 4.0 * v.values[i]);
  CHECK(h.trace() == doctest::Approx(4.0 * std::accumulate(v.values.begin(), v.values.end(), 0.0)));
}

TEST_CASE("assembled matrices are symmetric with unit hopping") {
  for (int d = 1; d <= 3; ++d) {
    const auto box = make_box(d, 2);
    const auto h = assemble(random_potential(box, 3), 2.5);
    for (std::size_t i = 0; i < h.n; ++i) {
      int offdiag = 0;
      for (std::size_t j = 0; j < h.n; ++j) {
        REQUIRE(h(i, j) == h(j, i));
        if (i != j && h(i, j) != 0.0) {
          REQUIRE(h(i, j) == -1.0);
          ++offdiag;
        }
      }
      REQUIRE(offdiag == 2 * d);
    }
  }
}

TEST_CASE("non-positive coupling is a domain error") {
  const auto box = make_box(1, 2);
  CHECK(code_of([&] { (void)assemble(constant_potential(box, 0.1), 0.0); }) == ErrorCode::domain);
  CHECK(code_of([&] { (void)assemble(constant_potential(box, 0.1), -1.0); }) == ErrorCode::domain);
}

TEST_CASE("restriction to a cube") {
  const auto box = make_box(2, 4);
  const auto v = random_potential(box, 5);
  const PeriodicBox cube(2, 3, Site{-1, 0});
  const auto h = restrict(v, 2.0, cube);
  CHECK(h.n == 9);
  for (std::size_t i = 0; i < h.n; ++i) CHECK(h(i, i) == 2.0 * v.values[box.index(cube.site(i))]);
  // Periodic on the cube itself: both ends of a row are coupled.
  CHECK(h(cube.index(Site{-1, 0}), cube.index(Site{1, 0})) == -1.0);

  const PeriodicBox outside(2, 3, Site{3, 3});
  CHECK(code_of([&] { (void)restrict(v, 2.0, outside); }) == ErrorCode::geometry);
}

TEST_CASE("rank-one shift changes one diagonal entry and interlaces") {
  const auto box = make_box(1, 10);
  const auto h = assemble(random_potential(box, 2), 3.0);
  const std::size_t x = 7;
  for (double t : {0.3, 1.0, 5.0}) {
    const auto g = rank_one_shift(h, x, t);
    for (std::size_t i = 0; i < h.n; ++i)
      for (std::size_t j = 0; j < h.n; ++j) REQUIRE(g(i, j) == h(i, j) + (i == x && j == x ? t : 0.0));
    const auto a = eigvalsh(h).values;
    const auto b = eigvalsh(g).values;
    // Positive rank-one perturbation: a_j <= b_j <= a_{j+1}.
    for (std::size_t j = 0; j < a.size(); ++j) {
      REQUIRE(b[j] >= a[j] - 1e-12);
      if (j + 1 < a.size()) REQUIRE(b[j] <= a[j + 1] + 1e-12);
    }
  }
  CHECK(code_of([&] { (void)rank_one_shift(h, h.n, 1.0); }) == ErrorCode::index);
}

TEST_CASE("free spectrum matches the cosine formula") {
  for (int d = 1; d <= 2; ++d)
    for (int L = 1; L <= (d == 1 ? 20 : 5); ++L) {
      const auto box = make_box(d, L);
      const auto s = eigvalsh(assemble(constant_potential(box, 0.0), 1.0));
      const auto oracle = free_spectrum(d, box.side());
      for (std::size_t j = 0; j < oracle.size(); ++j) REQUIRE(s.values[j] == doctest::Approx(oracle[j]).epsilon(1e-12));
    }
}

TEST_CASE("spectrum lies within the Gershgorin bound") {
  for (double lambda : {0.5, 4.0, 10.0}) {
    const auto box = make_box(2, 4);
    const auto v = random_potential(box, 11);
    const auto h = assemble(v, lambda);
    const auto s = eigvalsh(h);
    const double bound = 2.0 * 2 + lambda * v.sup_norm();
    CHECK(s.values.front() >= -bound - 1e-12);
    CHECK(s.values.back() <= bound + 1e-12);
    CHECK(h.norm_bound() <= bound + 1e-12);
  }
}

TEST_CASE("triplet output lists the upper triangle") {
  const auto h = assemble(constant_potential(make_box(1, 1), 0.5), 2.0);
  std::ostringstream os;
  write_triplets(h, os);
  CHECK(os.str() == "# n 3\n0 0 1\n0 1 -1\n0 2 -1\n1 1 1\n1 2 -1\n2 2 1\n");
}
