#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "alloylab/error.hpp"
#include "alloylab/harness.hpp"
#include "json.hpp"

namespace alloy {

namespace {

using json = nlohmann::json;

const std::set<std::string> kExperiments = {"poisson", "wegner-minami", "localization", "wiener",
                                            "representation", "truncation", "lemmas", "joint"};

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(child(path, k), "unknown field");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), child(path, key)) : fallback;
}

long long get_integer(const json& obj, const std::string& path, const char* key, long long fallback) {
  return obj.contains(key) ? integer(obj.at(key), child(path, key)) : fallback;
}

double positive(double x, const std::string& path) {
  if (!(x > 0.0)) throw ConfigError(path, "must be positive");
  return x;
}

long long at_least(long long x, long long lo, const std::string& path) {
  if (x < lo) throw ConfigError(path, "must be at least " + std::to_string(lo));
  return x;
}

std::vector<double> number_list(const json& obj, const std::string& path, const char* key,
                                std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& a = obj.at(key);
  const std::string p = child(path, key);
  if (!a.is_array() || a.empty()) throw ConfigError(p, "expected a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(number(a[i], p + "/" + std::to_string(i)));
  return out;
}

json resolve_disorder(const json& j, const std::string& path) {
  require_object(j, path);
  const std::string law = j.value("law", std::string("uniform"));
  if (law == "uniform") {
    allow_keys(j, path, {"law", "lo", "hi"});
    const double lo = get_number(j, path, "lo", -0.5), hi = get_number(j, path, "hi", 0.5);
    if (!(hi > lo)) throw ConfigError(child(path, "hi"), "must exceed lo");
    return {{"law", "uniform"}, {"lo", lo}, {"hi", hi}};
  }
  if (law == "piecewise") {
    allow_keys(j, path, {"law", "edges", "weights"});
    if (!j.contains("edges")) throw ConfigError(child(path, "edges"), "required");
    if (!j.contains("weights")) throw ConfigError(child(path, "weights"), "required");
    const auto edges = number_list(j, path, "edges", {});
    const auto weights = number_list(j, path, "weights", {});
    if (edges.size() != weights.size() + 1) throw ConfigError(child(path, "weights"), "need one weight per bin");
    try {
      (void)DisorderLaw::piecewise(edges, weights);
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
    return {{"law", "piecewise"}, {"edges", edges}, {"weights", weights}};
  }
  throw ConfigError(child(path, "law"), "unknown law '" + law + "'");
}

json resolve_potential(const json& j, const std::string& path, int dimension) {
  require_object(j, path);
  if (!j.contains("family")) throw ConfigError(child(path, "family"), "required");
  if (!j.at("family").is_string()) throw ConfigError(child(path, "family"), "expected a string");
  const std::string family = j.at("family").get<std::string>();
  json out = {{"family", family}};
  if (family == "delta") {
    allow_keys(j, path, {"family"});
  } else if (family == "geometric") {
    allow_keys(j, path, {"family", "ratio", "radius"});
    if (!j.contains("ratio")) throw ConfigError(child(path, "ratio"), "required");
    const double r = number(j.at("ratio"), child(path, "ratio"));
    if (!(r > 0.0 && r < 1.0)) throw ConfigError(child(path, "ratio"), "must lie in (0, 1)");
    out["ratio"] = r;
    out["radius"] = get_integer(j, path, "radius", -1);
  } else if (family == "power") {
    allow_keys(j, path, {"family", "exponent", "radius"});
    if (!j.contains("exponent")) throw ConfigError(child(path, "exponent"), "required");
    out["exponent"] = positive(number(j.at("exponent"), child(path, "exponent")), child(path, "exponent"));
    out["radius"] = get_integer(j, path, "radius", -1);
  } else if (family == "nearest_neighbour") {
    allow_keys(j, path, {"family", "centre", "neighbour"});
    out["centre"] = get_number(j, path, "centre", 1.0);
    out["neighbour"] = get_number(j, path, "neighbour", 0.0);
  } else if (family == "file") {
    allow_keys(j, path, {"family", "path"});
    if (!j.contains("path") || !j.at("path").is_string()) throw ConfigError(child(path, "path"), "expected a string");
    out["path"] = j.at("path");
  } else if (family == "inline") {
    allow_keys(j, path, {"family", "definition"});
    if (!j.contains("definition")) throw ConfigError(child(path, "definition"), "required");
    out["definition"] = j.at("definition");
  } else {
    throw ConfigError(child(path, "family"), "unknown family '" + family + "'");
  }
  (void)dimension;
  return out;
}

std::vector<Interval> interval_list(const json& obj, const std::string& path, const char* key,
                                    std::vector<Interval> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& a = obj.at(key);
  const std::string p = child(path, key);
  if (!a.is_array() || a.empty()) throw ConfigError(p, "expected a non-empty array of [lo, hi] pairs");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string q = p + "/" + std::to_string(i);
    if (!a[i].is_array() || a[i].size() != 2) throw ConfigError(q, "expected [lo, hi]");
    const Interval iv{number(a[i][0], q + "/0"), number(a[i][1], q + "/1")};
    if (!(iv.hi > iv.lo)) throw ConfigError(q, "upper end must exceed lower end");
    out.push_back(iv);
  }
  return out;
}

void parse_params(const json& j, const std::string& path, ExperimentConfig& c) {
  require_object(j, path);
  const std::string& e = c.experiment;
  if (e == "poisson") {
    allow_keys(j, path, {"intervals", "max_count", "tolerance"});
    auto& p = c.poisson;
    p.intervals = interval_list(j, path, "intervals", p.intervals);
    p.max_count = static_cast<int>(at_least(get_integer(j, path, "max_count", p.max_count), 0, child(path, "max_count")));
    p.tolerance = positive(get_number(j, path, "tolerance", p.tolerance), child(path, "tolerance"));
  } else if (e == "wegner-minami") {
    allow_keys(j, path, {"lengths", "max_order"});
    auto& p = c.wegner;
    p.lengths = number_list(j, path, "lengths", p.lengths);
    for (std::size_t i = 0; i < p.lengths.size(); ++i)
      positive(p.lengths[i], child(path, "lengths") + "/" + std::to_string(i));
    p.max_order = static_cast<int>(at_least(get_integer(j, path, "max_order", p.max_order), 1, child(path, "max_order")));
  } else if (e == "localization") {
    allow_keys(j, path, {"spectrum_fraction", "mass_radius", "mass_fraction"});
    auto& p = c.localization;
    p.spectrum_fraction = get_number(j, path, "spectrum_fraction", p.spectrum_fraction);
    if (!(p.spectrum_fraction > 0.0 && p.spectrum_fraction <= 1.0))
      throw ConfigError(child(path, "spectrum_fraction"), "must lie in (0, 1]");
    p.mass_radius = static_cast<int>(at_least(get_integer(j, path, "mass_radius", p.mass_radius), 0, child(path, "mass_radius")));
    p.mass_fraction = get_number(j, path, "mass_fraction", p.mass_fraction);
    if (!(p.mass_fraction > 0.0 && p.mass_fraction <= 1.0))
      throw ConfigError(child(path, "mass_fraction"), "must lie in (0, 1]");
  } else if (e == "representation" || e == "truncation") {
    allow_keys(j, path, {"decomposition", "epsilon", "truncation_radius"});
    auto& p = c.representation;
    if (j.contains("decomposition")) {
      const auto& d = j.at("decomposition");
      const std::string dp = child(path, "decomposition");
      require_object(d, dp);
      allow_keys(d, dp, {"rho", "alpha", "beta", "beta_prime"});
      p.decomposition.rho = get_number(d, dp, "rho", p.decomposition.rho);
      p.decomposition.alpha = get_number(d, dp, "alpha", p.decomposition.alpha);
      p.decomposition.beta = get_number(d, dp, "beta", p.decomposition.beta);
      p.decomposition.beta_prime = get_number(d, dp, "beta_prime", p.decomposition.beta_prime);
    }
    p.epsilon = positive(get_number(j, path, "epsilon", p.epsilon), child(path, "epsilon"));
    p.truncation_radius = static_cast<int>(get_integer(j, path, "truncation_radius", p.truncation_radius));
  } else if (e == "wiener") {
    allow_keys(j, path, {"torus_size", "grid", "transport_samples", "transport_bins"});
    auto& p = c.wiener;
    p.torus_size = static_cast<int>(at_least(get_integer(j, path, "torus_size", p.torus_size), 1, child(path, "torus_size")));
    p.grid = static_cast<std::size_t>(at_least(get_integer(j, path, "grid", static_cast<long long>(p.grid)), 128, child(path, "grid")));
    p.transport_samples = static_cast<std::size_t>(
        at_least(get_integer(j, path, "transport_samples", static_cast<long long>(p.transport_samples)), 0,
                 child(path, "transport_samples")));
    p.transport_bins = static_cast<int>(at_least(get_integer(j, path, "transport_bins", p.transport_bins), 2, child(path, "transport_bins")));
  } else if (e == "lemmas") {
    allow_keys(j, path, {"monotonicity_instances", "monotonicity_size", "averaging_size", "averaging_samples",
                         "averaging_lengths", "averaging_couplings", "approx_instances", "approx_size",
                         "approx_radius"});
    auto& p = c.lemmas;
    p.monotonicity_instances = static_cast<std::size_t>(at_least(
        get_integer(j, path, "monotonicity_instances", static_cast<long long>(p.monotonicity_instances)), 0,
        child(path, "monotonicity_instances")));
    p.monotonicity_size = static_cast<int>(at_least(get_integer(j, path, "monotonicity_size", p.monotonicity_size), 1, child(path, "monotonicity_size")));
    p.averaging_size = static_cast<int>(at_least(get_integer(j, path, "averaging_size", p.averaging_size), 1, child(path, "averaging_size")));
    p.averaging_samples = static_cast<std::size_t>(at_least(
        get_integer(j, path, "averaging_samples", static_cast<long long>(p.averaging_samples)), 1000,
        child(path, "averaging_samples")));
    p.averaging_lengths = number_list(j, path, "averaging_lengths", p.averaging_lengths);
    p.averaging_couplings = number_list(j, path, "averaging_couplings", p.averaging_couplings);
    p.approx_instances = static_cast<std::size_t>(
        at_least(get_integer(j, path, "approx_instances", static_cast<long long>(p.approx_instances)), 0,
                 child(path, "approx_instances")));
    p.approx_size = static_cast<int>(at_least(get_integer(j, path, "approx_size", p.approx_size), 2, child(path, "approx_size")));
    p.approx_radius = static_cast<int>(at_least(get_integer(j, path, "approx_radius", p.approx_radius), 0, child(path, "approx_radius")));
  } else if (e == "joint") {
    allow_keys(j, path, {"window", "cells_per_axis"});
    auto& p = c.joint;
    p.window = positive(get_number(j, path, "window", p.window), child(path, "window"));
    p.cells_per_axis = static_cast<int>(at_least(get_integer(j, path, "cells_per_axis", p.cells_per_axis), 1, child(path, "cells_per_axis")));
  }
}

json params_json(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  auto intervals = [](const std::vector<Interval>& v) {
    json a = json::array();
    for (const auto& i : v) a.push_back({i.lo, i.hi});
    return a;
  };
  if (e == "poisson")
    return {{"intervals", intervals(c.poisson.intervals)},
            {"max_count", c.poisson.max_count},
            {"tolerance", c.poisson.tolerance}};
  if (e == "wegner-minami") return {{"lengths", c.wegner.lengths}, {"max_order", c.wegner.max_order}};
  if (e == "localization")
    return {{"spectrum_fraction", c.localization.spectrum_fraction},
            {"mass_radius", c.localization.mass_radius},
            {"mass_fraction", c.localization.mass_fraction}};
  if (e == "representation" || e == "truncation") {
    const auto& d = c.representation.decomposition;
    return {{"decomposition", {{"rho", d.rho}, {"alpha", d.alpha}, {"beta", d.beta}, {"beta_prime", d.beta_prime}}},
            {"epsilon", c.representation.epsilon},
            {"truncation_radius", c.representation.truncation_radius}};
  }
  if (e == "wiener")
    return {{"torus_size", c.wiener.torus_size},
            {"grid", c.wiener.grid},
            {"transport_samples", c.wiener.transport_samples},
            {"transport_bins", c.wiener.transport_bins}};
  if (e == "lemmas") {
    const auto& p = c.lemmas;
    return {{"monotonicity_instances", p.monotonicity_instances}, {"monotonicity_size", p.monotonicity_size},
            {"averaging_size", p.averaging_size},                 {"averaging_samples", p.averaging_samples},
            {"averaging_lengths", p.averaging_lengths},           {"averaging_couplings", p.averaging_couplings},
            {"approx_instances", p.approx_instances},             {"approx_size", p.approx_size},
            {"approx_radius", p.approx_radius}};
  }
  return {{"window", c.joint.window}, {"cells_per_axis", c.joint.cells_per_axis}};
}

bool needs_boxes(const std::string& e) { return e != "wiener" && e != "lemmas"; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("not valid JSON: ") + e.what());
  }
  require_object(j, "");
  allow_keys(j, "", {"experiment", "dimension", "box_sizes", "coupling", "disorder", "potential",
                     "reference_energy", "trials", "seed", "threads", "output", "ids", "params"});

  ExperimentConfig c;
  c.source_text = text;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw ConfigError("/experiment", "required string");
  c.experiment = j.at("experiment").get<std::string>();
  if (!kExperiments.count(c.experiment)) throw ConfigError("/experiment", "unknown experiment '" + c.experiment + "'");

  c.dimension = static_cast<int>(get_integer(j, "", "dimension", 1));
  if (c.dimension < 1 || c.dimension > kMaxDimension)
    throw ConfigError("/dimension", "must lie in [1, " + std::to_string(kMaxDimension) + "]");

  if (j.contains("box_sizes")) {
    const auto& a = j.at("box_sizes");
    if (!a.is_array() || a.empty()) throw ConfigError("/box_sizes", "expected a non-empty array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = "/box_sizes/" + std::to_string(i);
      c.box_sizes.push_back(static_cast<int>(at_least(integer(a[i], p), 1, p)));
    }
  } else if (needs_boxes(c.experiment)) {
    throw ConfigError("/box_sizes", "required for experiment '" + c.experiment + "'");
  }

  c.coupling = positive(get_number(j, "", "coupling", 1.0), "/coupling");
  c.disorder_json = resolve_disorder(j.value("disorder", json::object()), "/disorder").dump();
  if (!j.contains("potential") && c.experiment != "lemmas") throw ConfigError("/potential", "required");
  c.potential_json =
      resolve_potential(j.value("potential", json{{"family", "delta"}}), "/potential", c.dimension).dump();

  if (j.contains("reference_energy")) {
    const auto& r = j.at("reference_energy");
    require_object(r, "/reference_energy");
    allow_keys(r, "/reference_energy", {"rule", "energy"});
    const std::string rule = r.value("rule", std::string("band-center"));
    if (rule == "band-center") {
      c.reference_rule = ReferenceRule::band_center;
    } else if (rule == "fixed") {
      c.reference_rule = ReferenceRule::fixed;
      if (!r.contains("energy")) throw ConfigError("/reference_energy/energy", "required for rule 'fixed'");
      c.reference_energy = number(r.at("energy"), "/reference_energy/energy");
    } else {
      throw ConfigError("/reference_energy/rule", "unknown rule '" + rule + "'");
    }
  }

  if (!j.contains("trials")) throw ConfigError("/trials", "required");
  c.trials = static_cast<std::size_t>(at_least(integer(j.at("trials"), "/trials"), 1, "/trials"));
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("/seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.threads = static_cast<unsigned>(at_least(get_integer(j, "", "threads", 0), 0, "/threads"));
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw ConfigError("/output", "expected a string");
    c.output = j.at("output").get<std::string>();
  }
  if (j.contains("ids")) {
    const auto& s = j.at("ids");
    require_object(s, "/ids");
    allow_keys(s, "/ids", {"trials", "grid_points"});
    c.ids_trials = static_cast<std::size_t>(at_least(get_integer(s, "/ids", "trials", 200), 1, "/ids/trials"));
    c.ids_grid_points = static_cast<int>(at_least(get_integer(s, "/ids", "grid_points", 801), 3, "/ids/grid_points"));
  }
  if (j.contains("params")) parse_params(j.at("params"), "/params", c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["dimension"] = c.dimension;
  j["box_sizes"] = c.box_sizes;
  j["coupling"] = c.coupling;
  j["disorder"] = json::parse(c.disorder_json);
  j["potential"] = json::parse(c.potential_json);
  if (c.reference_rule == ReferenceRule::band_center)
    j["reference_energy"] = {{"rule", "band-center"}};
  else
    j["reference_energy"] = {{"rule", "fixed"}, {"energy", c.reference_energy}};
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output"] = c.output;
  j["ids"] = {{"trials", c.ids_trials}, {"grid_points", c.ids_grid_points}};
  j["params"] = params_json(c);
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  // The thread budget and output location do not influence results.
  ExperimentConfig c = config;
  c.threads = 0;
  c.output.clear();
  const std::string text = resolved_config_json(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DisorderLaw build_law(const ExperimentConfig& c) {
  const json j = json::parse(c.disorder_json);
  if (j.at("law") == "uniform") return DisorderLaw::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  return DisorderLaw::piecewise(j.at("edges").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
}

SingleSitePotential build_potential(const ExperimentConfig& c) {
  const json j = json::parse(c.potential_json);
  const std::string family = j.at("family").get<std::string>();
  const int d = c.dimension;
  try {
    SingleSitePotential u = [&]() -> SingleSitePotential {
      if (family == "delta") return delta_potential(d);
      if (family == "geometric")
        return geometric_potential(d, j.at("ratio").get<double>(), j.at("radius").get<int>());
      if (family == "power") return power_potential(d, j.at("exponent").get<double>(), j.at("radius").get<int>());
      if (family == "nearest_neighbour")
        return nearest_neighbour_potential(d, j.at("centre").get<double>(), j.at("neighbour").get<double>());
      if (family == "file") return load_potential(j.at("path").get<std::string>());
      return parse_potential(j.at("definition").dump());
    }();
    if (u.dimension() != d)
      throw ConfigError("/potential", "potential dimension " + std::to_string(u.dimension()) +
                                          " differs from the configured dimension");
    return u;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("/potential", e.what());
  }
}

}  // namespace alloy
