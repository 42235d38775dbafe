#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <numbers>
#include <sstream>

#include "alloylab/error.hpp"
#include "alloylab/harness.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace alloy;
namespace fs = std::filesystem;

namespace {

std::string config_error_path(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "harness_scratch" / name;
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(const std::string& experiment, const std::string& extra = "") {
  std::string text = R"({"experiment":")" + experiment +
                     R"(","dimension":1,"box_sizes":[20,30],"coupling":4,"potential":{"family":"delta"},)"
                     R"("trials":20,"seed":5,"ids":{"trials":20,"grid_points":201})" +
                     extra + "}";
  return parse_config(text);
}

IdsCurve curve(std::function<double(double)> f, double lo, double hi, int n) {
  IdsCurve c;
  for (int i = 0; i < n; ++i) {
    const double e = lo + (hi - lo) * i / (n - 1);
    c.energies.push_back(e);
    c.values.push_back(f(e));
    c.std_errors.push_back(0.0);
  }
  c.volume = 10001;
  c.samples = 100;
  return c;
}

}  // namespace

TEST_CASE("config validation reports field paths") {
  const std::string base = R"("experiment":"poisson","box_sizes":[10],"potential":{"family":"delta"})";
  CHECK(config_error_path("{" + base + R"(,"trials":0})") == "/trials");
  CHECK(config_error_path("{" + base + "}") == "/trials");
  CHECK(config_error_path("{" + base + R"(,"trials":5,"colour":1})") == "/colour");
  CHECK(config_error_path(R"({"experiment":"nope","trials":1})") == "/experiment");
  CHECK(config_error_path("{" + base + R"(,"trials":5,"coupling":-1})") == "/coupling");
  CHECK(config_error_path(R"({"experiment":"poisson","box_sizes":[10],"trials":5,"potential":{"family":"geometric","ratio":2}})") ==
        "/potential/ratio");
  CHECK(config_error_path("{" + base + R"(,"trials":5,"params":{"intervals":[[1,0]]}})") == "/params/intervals/0");
  CHECK(config_error_path("{" + base + R"(,"trials":5,"reference_energy":{"rule":"fixed"}})") ==
        "/reference_energy/energy");
  CHECK(config_error_path("{" + base + R"(,"trials":5})") == "<accepted>");
  CHECK(config_error_path("not json") == "");
}

TEST_CASE("config hash ignores threads and output but not the seed") {
  auto a = small("poisson");
  auto b = a;
  b.threads = 7;
  b.output = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 6;
  CHECK(config_hash(a) != config_hash(b));
  // Resolved JSON round-trips.
  const auto again = parse_config(resolved_config_json(a));
  CHECK(config_hash(again) == config_hash(a));
}

TEST_CASE("band-centre reference energy on a symmetric IDS") {
  const auto ids = curve([](double e) { return std::acos(-e / 2.0) / std::numbers::pi; }, -1.99, 1.99, 399);
  const auto r = pick_reference_energy(ids, ReferenceRule::band_center, 0.0);
  CHECK(std::abs(r.e0) <= 1e-12);
  CHECK(r.n0 == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-2));
  CHECK(r.bandwidth > 0.0);
}

TEST_CASE("fixed reference energy inside a spectral gap is rejected") {
  const auto ids = curve([](double e) { return e < -1.0 ? (e + 2.0) / 2.0 : (e > 1.0 ? (e) / 2.0 : 0.5); }, -2.0,
                         2.0, 401);
  try {
    (void)pick_reference_energy(ids, ReferenceRule::fixed, 0.0);
    FAIL("expected a reference-energy error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::reference_energy);
  }
  try {
    (void)pick_reference_energy(ids, ReferenceRule::fixed, 5.0);
    FAIL("expected a reference-energy error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::reference_energy);
  }
}

TEST_CASE("potential families resolve") {
  auto c = small("poisson");
  CHECK(build_potential(c).l1_norm() == doctest::Approx(1.0));
  c = parse_config(R"({"experiment":"wiener","potential":{"family":"geometric","ratio":0.25},"trials":1})");
  CHECK(build_potential(c).at(Site{1}) == doctest::Approx(0.25));
  c = parse_config(R"({"experiment":"wiener","trials":1,"potential":{"family":"inline","definition":)"
                   R"({"dimension":1,"coefficients":[{"offset":[0],"value":2}]}}})");
  CHECK(build_potential(c).at(Site{0}) == 2.0);
  c = parse_config(
      R"({"experiment":"poisson","box_sizes":[5],"trials":1,"disorder":{"law":"piecewise","edges":[0,1,2],"weights":[0.5,0.5]},"potential":{"family":"delta"}})");
  CHECK(build_law(c).upper() == 2.0);
}

TEST_CASE("realized Hamiltonians are reproducible") {
  const auto c = small("poisson");
  const auto a = realize_hamiltonian(c, 10, 3);
  const auto b = realize_hamiltonian(c, 10, 3);
  const auto d = realize_hamiltonian(c, 10, 4);
  CHECK(a.a == b.a);
  CHECK(a.a != d.a);
  CHECK(a.n == 21);
}

TEST_CASE("every experiment runs end to end on a small configuration") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"poisson", ""},
      {"wegner-minami", R"(,"params":{"lengths":[0.1,0.3]})"},
      {"localization", ""},
      {"wiener", R"(,"params":{"torus_size":64,"transport_samples":500})"},
      {"representation", ""},
      {"truncation", ""},
      {"joint", ""},
  };
  for (const auto& [name, extra] : cases) {
    CAPTURE(name);
    auto c = small(name, extra);
    if (name == "representation" || name == "truncation")
      c = parse_config(
          R"({"experiment":")" + name +
          R"(","dimension":1,"box_sizes":[60,80],"coupling":10,"potential":{"family":"power","exponent":2,"radius":30},)"
          R"("trials":6,"seed":5,"ids":{"trials":10,"grid_points":201}})");
    c.output = scratch(name).string();
    const auto s = run(c);
    CHECK(s.experiment == name);
    CHECK_FALSE(s.files.empty());
    for (const auto& f : s.files) CHECK(fs::exists(fs::path(c.output) / f));
    CHECK(fs::exists(fs::path(c.output) / "summary.json"));
    const auto j = nlohmann::json::parse(slurp(fs::path(c.output) / "summary.json"));
    CHECK(j.at("config_hash") == config_hash(c));
  }

  auto lem = parse_config(
      R"({"experiment":"lemmas","trials":1,"seed":3,"params":{"monotonicity_instances":10,"monotonicity_size":10,)"
      R"("averaging_size":6,"averaging_samples":1000,"averaging_lengths":[0.1],"averaging_couplings":[1],)"
      R"("approx_instances":4,"approx_size":20,"approx_radius":4}})");
  lem.output = scratch("lemmas").string();
  const auto s = run(lem);
  CHECK(s.passed());
  CHECK(fs::exists(fs::path(lem.output) / "lemma_report.csv"));
}

TEST_CASE("results do not depend on the thread count") {
  auto c = small("poisson");
  const fs::path one = scratch("threads1"), many = scratch("threads8");
  c.threads = 1;
  c.output = one.string();
  const auto s1 = run(c);
  c.threads = 8;
  c.output = many.string();
  const auto s8 = run(c);
  REQUIRE(s1.files == s8.files);
  std::size_t compared = 0;
  for (const auto& f : s1.files) {
    CAPTURE(f);
    if (!f.ends_with(".csv") && !f.ends_with(".dat")) continue;
    CHECK(slurp(one / f) == slurp(many / f));
    ++compared;
  }
  CHECK(compared >= 3);
  CHECK(s1.metrics == s8.metrics);
}
