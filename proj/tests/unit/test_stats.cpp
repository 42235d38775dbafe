#include <cmath>
#include <numbers>
#include <random>

#include "alloylab/error.hpp"
#include "alloylab/operator.hpp"
#include "alloylab/stats.hpp"
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

constexpr double kInvE = 0.36787944117144232;      // P(N = 1), mean 1
constexpr double kHalfInvE = 0.18393972058572116;  // P(N = 2), mean 1

HamiltonianMatrix free_chain(int L) {
  const auto box = make_box(1, L);
  CorrelatedPotential v;
  v.box = box;
  v.values.assign(box.volume(), 0.0);
  return assemble(v, 1.0);
}

Spectrum fake_spectrum(const PeriodicBox& box, std::vector<double> values) {
  Spectrum s;
  s.box = box;
  s.dim = box.volume();
  s.values = std::move(values);
  s.window_lo = -10.0;
  s.window_hi = 10.0;
  return s;
}

// Window spectrum whose vectors are unit vectors at the given sites.
Spectrum localized_spectrum(const PeriodicBox& box, std::vector<double> values, const std::vector<Site>& sites) {
  Spectrum s = fake_spectrum(box, std::move(values));
  s.vectors.assign(s.values.size() * s.dim, 0.0);
  for (std::size_t j = 0; j < sites.size(); ++j) s.vectors[j * s.dim + box.index(sites[j])] = 1.0;
  return s;
}

}  // namespace

TEST_CASE("free chain IDS follows the arccos law") {
  const auto s = eigvalsh(free_chain(500));
  std::vector<double> grid;
  for (double e = -1.9; e <= 1.9 + 1e-12; e += 0.1) grid.push_back(e);
  const auto ids = estimate_ids({s}, grid);
  for (std::size_t g = 0; g < grid.size(); ++g)
    CHECK(std::abs(ids.values[g] - std::acos(-grid[g] / 2.0) / std::numbers::pi) <= 2e-3);
  CHECK(ids.at(0.0) == doctest::Approx(0.5).epsilon(2e-3));
  // n(0) = 1/(2π) for the hopping-only chain.
  const auto dos = dos_at(ids, 0.0, 0.5);
  const double exact = (std::acos(-0.25) - std::acos(0.25)) / std::numbers::pi;
  CHECK(dos.value == doctest::Approx(exact).epsilon(5e-3));
  CHECK(std::abs(exact - 1.0 / (2.0 * std::numbers::pi)) < 0.01);
  CHECK(dos.positive);
  CHECK(code_of([&] { (void)ids.at(3.0); }) == ErrorCode::domain);
}

TEST_CASE("IDS from counts agrees with the spectrum-based estimator") {
  std::vector<Spectrum> spectra;
  std::vector<std::vector<std::size_t>> counts;
  const std::vector<double> grid = {-3.0, -1.0, 0.0, 1.0, 3.0};
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto box = make_box(1, 30);
    const auto w = sample_disorder(box, DisorderLaw::uniform(), 4, t);
    const auto h = assemble(correlate(w, delta_potential(1), box), 3.0);
    spectra.push_back(eigvalsh(h));
    std::vector<std::size_t> row;
    for (double e : grid) row.push_back(count_at_most(h, e));
    counts.push_back(row);
  }
  const auto a = estimate_ids(spectra, grid);
  const auto b = ids_from_counts(counts, grid, spectra[0].dim);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(a.values[g] == doctest::Approx(b.values[g]));
    CHECK(a.std_errors[g] == doctest::Approx(b.std_errors[g]));
  }
}

TEST_CASE("unfolding arithmetic") {
  const auto box = make_box(1, 4);  // 9 sites
  auto s = fake_spectrum(box, {-1.0, 0.1, 0.2, 0.5});
  s.window_lo = -2.0;
  s.window_hi = 2.0;
  const auto p = unfold(s, 0.0, 0.5, 1.5);
  // ξ = 9 * 0.5 * E.
  REQUIRE(p.points.size() == 2);
  CHECK(p.points[0] == doctest::Approx(0.45));
  CHECK(p.points[1] == doctest::Approx(0.9));
  CHECK(p.energy_of(0.9) == doctest::Approx(0.2));
  CHECK(code_of([&] { (void)unfold(s, 0.0, 0.5, 20.0); }) == ErrorCode::domain);
  CHECK(code_of([&] { (void)unfold(s, 0.0, 0.0, 1.0); }) == ErrorCode::domain);
}

TEST_CASE("Poisson reference probabilities") {
  const std::vector<double> one = {1.0};
  CHECK(poisson_reference(one, std::vector<int>{1}) == doctest::Approx(kInvE).epsilon(1e-15));
  CHECK(poisson_reference(one, std::vector<int>{2}) == doctest::Approx(kHalfInvE).epsilon(1e-15));
  const std::vector<double> two = {1.0, 1.0};
  CHECK(poisson_reference(two, std::vector<int>{0, 2}) == doctest::Approx(kInvE * kHalfInvE).epsilon(1e-15));
}

TEST_CASE("counting statistics of a simulated Poisson process") {
  std::mt19937_64 gen(2024);
  std::poisson_distribution<int> count(8.0);
  std::uniform_real_distribution<double> where(-4.0, 4.0);
  std::vector<UnfoldedPointProcess> procs(20000);
  for (auto& p : procs) {
    const int n = count(gen);
    for (int i = 0; i < n; ++i) p.points.push_back(where(gen));
  }
  const std::vector<Interval> ivs = {{0.0, 1.0}, {-2.0, -1.0}};
  for (int k1 = 0; k1 <= 2; ++k1)
    for (int k2 = 0; k2 <= 2; ++k2) {
      const auto est = counting_statistics(procs, ivs, {k1, k2});
      CHECK(est.reference == doctest::Approx(poisson_reference(std::vector<double>{1.0, 1.0},
                                                               std::vector<int>{k1, k2})));
      CHECK(std::abs(est.frequency - est.reference) <= est.half_width);
    }
  CHECK(code_of([&] { (void)counting_statistics(procs, {{0.0, 1.0}, {0.5, 2.0}}, {0, 0}); }) == ErrorCode::domain);
}

TEST_CASE("factorial moments") {
  const std::vector<std::size_t> c = {0, 1, 2, 3};
  CHECK(factorial_moment(c, 1).mean == doctest::Approx(1.5));
  CHECK(factorial_moment(c, 2).mean == doctest::Approx(2.0));
  CHECK(factorial_moment(c, 3).mean == doctest::Approx(1.5));
  CHECK(factorial_moment(c, 2).trials == 4);
  // Nested: N1 (N2 - 1) with N1 <= N2.
  const std::vector<std::vector<std::size_t>> nested = {{1, 2}, {0, 3}, {2, 2}};
  CHECK(factorial_moment_nested(nested).mean == doctest::Approx((1.0 + 0.0 + 2.0) / 3.0));
  CHECK(code_of([] { (void)factorial_moment_nested({{2, 1}}); }) == ErrorCode::domain);
  CHECK(code_of([&] { (void)factorial_moment(c, 0); }) == ErrorCode::domain);
}

TEST_CASE("factorial moments of Poisson counts equal powers of the mean") {
  std::mt19937_64 gen(7);
  std::poisson_distribution<std::size_t> p(2.5);
  std::vector<std::size_t> c(200000);
  for (auto& x : c) x = p(gen);
  for (int k = 1; k <= 3; ++k) {
    const auto m = factorial_moment(c, k);
    CHECK(std::abs(m.mean - std::pow(2.5, k)) <= m.half_width);
  }
}

TEST_CASE("single-site Wegner ratio") {
  // One site, no hopping: the only eigenvalue is λ ω.
  const double lambda = 4.0;
  const PeriodicBox box(1, 1, Site{0});
  const auto law = DisorderLaw::uniform();
  const Interval iv{0.0, 0.2};
  std::vector<std::size_t> counts;
  for (std::uint64_t t = 0; t < 100000; ++t) {
    const auto w = sample_disorder(box, law, 8, t);
    counts.push_back(iv.contains(lambda * w.values[0]) ? 1 : 0);
  }
  const auto rows = wegner_minami_rows(counts, iv, 0, 1, 2, law);
  REQUIRE(rows.size() == 2);
  CHECK(std::abs(rows[0].ratio - 1.0 / lambda) <= rows[0].ratio_half_width);
  CHECK(rows[0].concentration == doctest::Approx(0.2));
  CHECK(rows[1].moment.mean == 0.0);
}

TEST_CASE("localization fit on exact profiles") {
  const auto box = make_box(1, 20);
  std::vector<double> delta(box.volume(), 0.0);
  delta[box.index(Site{3})] = 1.0;
  const auto rd = localize_vector(box, delta);
  CHECK(rd.center == Site{3});
  CHECK_FALSE(rd.fit_valid);
  CHECK(rd.mass_outside[0] == 0.0);
  CHECK(rd.near_max_diameter == 0);

  std::vector<double> expo(box.volume());
  double norm = 0.0;
  for (std::size_t i = 0; i < expo.size(); ++i) {
    expo[i] = std::exp(-static_cast<double>(box.torus_distance(box.site(i), Site{-5})));
    norm += expo[i] * expo[i];
  }
  for (auto& x : expo) x /= std::sqrt(norm);
  const auto re = localize_vector(box, expo);
  CHECK(re.center == Site{-5});
  REQUIRE(re.fit_valid);
  CHECK(re.eta == doctest::Approx(1.0).epsilon(1e-12));
  // Mass beyond distance 0 is 1 - |φ(c)|^2.
  CHECK(re.mass_outside[0] == doctest::Approx(1.0 - expo[box.index(Site{-5})] * expo[box.index(Site{-5})]));
  for (std::size_t r = 1; r < re.mass_outside.size(); ++r) CHECK(re.mass_outside[r] <= re.mass_outside[r - 1]);
}

TEST_CASE("local-global matching") {
  const auto parent = make_box(1, 50);
  const auto dec = decompose(parent, 20, 5);
  REQUIRE(dec.count() == 4);
  const Interval window{0.0, 0.1};

  SUBCASE("no eigenvalue anywhere is trivially fine") {
    std::vector<Spectrum> locals;
    for (std::size_t j = 0; j < dec.count(); ++j) locals.push_back(localized_spectrum(dec.cube(j), {}, {}));
    const auto g = localized_spectrum(parent, {}, {});
    const auto m = match_local_global(g, locals, dec, window, 1.0);
    CHECK(m.z_ok);
    CHECK(m.pairs.empty());
  }

  SUBCASE("two local levels in one cube break (i)") {
    std::vector<Spectrum> locals;
    for (std::size_t j = 0; j < dec.count(); ++j) locals.push_back(localized_spectrum(dec.cube(j), {}, {}));
    const auto c0 = dec.cube(0);
    Site mid = c0.origin();
    mid[0] += 10;
    locals[0] = localized_spectrum(c0, {0.02, 0.05}, {mid, mid});
    const auto g = localized_spectrum(parent, {0.02}, {mid});
    const auto m = match_local_global(g, locals, dec, window, 1.0);
    CHECK_FALSE(m.condition_i);
    CHECK_FALSE(m.z_ok);
  }

  SUBCASE("deep matched pair passes, shallow centre breaks (ii)") {
    std::vector<Spectrum> locals;
    for (std::size_t j = 0; j < dec.count(); ++j) locals.push_back(localized_spectrum(dec.cube(j), {}, {}));
    const auto c1 = dec.cube(1);
    Site mid = c1.origin();
    mid[0] += 10;
    locals[1] = localized_spectrum(c1, {0.05}, {mid});
    const auto g = localized_spectrum(parent, {0.05 + 1e-6}, {mid});
    const auto m = match_local_global(g, locals, dec, window, 1.0);
    CHECK(m.condition_i);
    CHECK(m.condition_ii);
    CHECK(m.condition_iii);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].cube == 1);
    CHECK(m.threshold == doctest::Approx(std::exp(-2.5)));

    Site edge = c1.origin();
    edge[0] += 1;
    const auto g2 = localized_spectrum(parent, {0.05}, {edge});
    const auto m2 = match_local_global(g2, locals, dec, window, 1.0);
    CHECK_FALSE(m2.condition_ii);
    CHECK(m2.center_depths[0] == 2);
  }

  SUBCASE("bernoulli indicator") {
    const auto c = dec.cube(2);
    Site mid = c.origin();
    mid[0] += 10;
    const auto s = localized_spectrum(c, {0.05}, {mid});
    CHECK(bernoulli_x(s, window, 5.0) == 1);
    CHECK(bernoulli_x(s, window, 10.0) == 0);
    CHECK(bernoulli_x(s, {0.2, 0.3}, 5.0) == 0);
    const auto two = localized_spectrum(c, {0.03, 0.05}, {mid, mid});
    CHECK(bernoulli_x(two, window, 5.0) == 0);
  }

  SUBCASE("mismatched provenance is rejected") {
    std::vector<Spectrum> locals;
    for (std::size_t j = 0; j < dec.count(); ++j) locals.push_back(localized_spectrum(dec.cube(j), {}, {}));
    const auto g = localized_spectrum(make_box(1, 40), {}, {});
    CHECK(code_of([&] { (void)match_local_global(g, locals, dec, window, 1.0); }) == ErrorCode::provenance);
  }
}

TEST_CASE("joint process statistics under the null and under dependence") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> xi(-5.0, 5.0);
  std::uniform_int_distribution<int> site(-50, 50);
  std::vector<UnfoldedPointProcess> null_procs(400), dep_procs(400);
  for (std::size_t t = 0; t < 400; ++t)
    for (int j = 0; j < 5; ++j) {
      null_procs[t].points.push_back(xi(gen));
      null_procs[t].centers.push_back(Site{site(gen)});
      const int x = site(gen);
      dep_procs[t].points.push_back(x / 10.0);
      dep_procs[t].centers.push_back(Site{x});
    }
  const auto r0 = joint_process(null_procs, 50, 4);
  CHECK(r0.points.size() == 2000);
  CHECK(r0.degrees_of_freedom == 3);
  CHECK(r0.p_value > 1e-3);
  CHECK(std::abs(r0.rank_correlations[0]) <= r0.correlation_bound);
  const auto r1 = joint_process(dep_procs, 50, 4);
  CHECK(r1.rank_correlations[0] == doctest::Approx(1.0));
}

TEST_CASE("Spearman and chi-square helpers") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {5, 6, 7, 8, 7};
  const std::vector<double> z = {5, 4, 3, 2, 1};
  CHECK(spearman(x, z) == doctest::Approx(-1.0));
  // Ranks of y with ties averaged: 1, 2, 3.5, 5, 3.5.
  CHECK(spearman(x, y) == doctest::Approx(0.82078268166812329).epsilon(1e-12));
  CHECK(chi_square_p_value(0.0, 3) == doctest::Approx(1.0));
  // Survival function of chi-square with 2 dof is exp(-x/2).
  CHECK(chi_square_p_value(4.0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}
