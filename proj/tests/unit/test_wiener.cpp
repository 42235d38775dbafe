#include <cmath>
#include <sstream>

#include "alloylab/error.hpp"
#include "alloylab/wiener.hpp"
#include "doctest.h"
#include "json.hpp"

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

// Inverse of the geometric profile r^{|n|} in d = 1: tridiagonal with
// v_0 = (1 + r^2)/(1 - r^2) and v_{±1} = -r/(1 - r^2).
constexpr double kGeometricQuarterV0 = 17.0 / 15.0;
constexpr double kGeometricQuarterV1 = -4.0 / 15.0;

SingleSitePotential shifted(const SingleSitePotential& u, int s) {
  nlohmann::json j;
  j["dimension"] = 1;
  j["coefficients"] = nlohmann::json::array();
  for (int n = -u.radius(); n <= u.radius(); ++n) {
    const double c = u.at(Site{n});
    if (c != 0.0) j["coefficients"].push_back({{"offset", {n + s}}, {"value", c}});
  }
  return parse_potential(j.dump());
}

SingleSitePotential scaled(const SingleSitePotential& u, double c) {
  nlohmann::json j;
  j["dimension"] = 1;
  j["coefficients"] = nlohmann::json::array();
  for (int n = -u.radius(); n <= u.radius(); ++n)
    if (u.at(Site{n}) != 0.0) j["coefficients"].push_back({{"offset", {n}}, {"value", c * u.at(Site{n})}});
  return parse_potential(j.dump());
}

}  // namespace

TEST_CASE("delta profile inverts to itself") {
  for (int d = 1; d <= 2; ++d) {
    const auto u = delta_potential(d);
    const auto w = build_wiener(u);
    CHECK(w.kappa == doctest::Approx(1.0));
    CHECK(w.k == Site(d));
    CHECK(w.inverse_at(Site(d)) == doctest::Approx(1.0));
    CHECK(w.identity_error <= 1e-12);
    CHECK(w.converged);
  }
}

TEST_CASE("geometric profile has a tridiagonal inverse") {
  const auto u = geometric_potential(1, 0.25);
  const auto w = build_wiener(u);
  CHECK(w.k == Site{0});
  CHECK(w.inverse_at(Site{0}) == doctest::Approx(kGeometricQuarterV0).epsilon(1e-9));
  CHECK(w.inverse_at(Site{1}) == doctest::Approx(kGeometricQuarterV1).epsilon(1e-9));
  CHECK(w.inverse_at(Site{-1}) == doctest::Approx(kGeometricQuarterV1).epsilon(1e-9));
  CHECK(std::abs(w.inverse_at(Site{2})) <= 1e-9);
  CHECK(std::abs(w.kappa - kGeometricQuarterV0) <= 1e-6);
  CHECK(w.min_abs_multiplier == doctest::Approx(0.6).epsilon(1e-8));
  CHECK(w.max_abs_multiplier == doctest::Approx(5.0 / 3.0).epsilon(1e-8));

  const auto lemma = kappa_from_lemma(u, w);
  CHECK(std::abs(lemma.kappa - w.kappa) <= 1e-8);
}

TEST_CASE("inverse identities hold for a power-law profile") {
  const auto u = power_potential(1, 2.0, 60);
  const auto w = build_wiener(u);
  CHECK(w.pairing_sum == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w.identity_error <= 1e-10);
  CHECK(w.converged);
}

TEST_CASE("conditional slope converges to the inverse coefficient") {
  const auto u = geometric_potential(1, 0.25);
  const auto w = build_wiener(u);
  const double slope = conditional_slope(u, 512, w.k, Site{0});
  CHECK(std::abs(slope - w.inverse_at(Site{0} - w.k)) <= 1e-6);

  const auto p = power_potential(1, 2.0, 60);
  const auto wp = build_wiener(p);
  const double sp = conditional_slope(p, 512, wp.k, Site{0});
  CHECK(std::abs(sp - wp.a_tilde) <= 1e-6);
}

TEST_CASE("kappa is translation invariant") {
  const auto u = geometric_potential(1, 0.3, 20);
  const double base = build_wiener(u).kappa;
  for (int s : {-3, 1, 5}) {
    const auto w = build_wiener(shifted(u, s));
    CHECK(w.kappa == doctest::Approx(base).epsilon(1e-10));
    CHECK(w.k == Site{s});
  }
}

TEST_CASE("kappa scales inversely with the profile") {
  const auto u = geometric_potential(1, 0.3, 20);
  const double base = build_wiener(u).kappa;
  for (double c : {0.5, 3.0, -2.0}) CHECK(build_wiener(scaled(u, c)).kappa == doctest::Approx(base / std::abs(c)).epsilon(1e-10));
}

TEST_CASE("vanishing multiplier is rejected") {
  const auto u = nearest_neighbour_potential(1, 1.0, 0.6);
  CHECK(code_of([&] { (void)build_wiener(u); }) == ErrorCode::non_invertible_multiplier);
  CHECK(code_of([&] { (void)build_wiener(delta_potential(1), 100); }) == ErrorCode::domain);
}

TEST_CASE("torus resonance is detected") {
  // M(θ) = 1 + 2 (1/2) cos θ vanishes at θ = π, which lies on every even torus.
  const auto u = nearest_neighbour_potential(1, 1.0, 0.5);
  CHECK(code_of([&] { (void)conditional_slope(u, 8, Site{0}, Site{0}); }) == ErrorCode::torus_resonance);
}

TEST_CASE("transport check reproduces the affine identity") {
  const auto u = geometric_potential(1, 0.25, 10);
  const auto t = concentration_transport_check(u, 64, Site{0}, Site{0}, DisorderLaw::uniform(), 4000, 20, 5);
  CHECK(t.max_identity_error <= 1e-10);
  CHECK(t.slope == doctest::Approx(kGeometricQuarterV0).epsilon(1e-8));
  CHECK(t.observed_max - t.observed_min <= t.predicted_width + 1e-9);
  CHECK(t.p_value > 1e-4);
}

TEST_CASE("report is valid JSON") {
  const auto u = geometric_potential(1, 0.25);
  const auto j = nlohmann::json::parse(wiener_report_json(u, build_wiener(u)));
  CHECK(j.contains("kappa"));
}
