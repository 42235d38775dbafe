#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alloylab/disorder.hpp"
#include "alloylab/lattice.hpp"
#include "alloylab/operator.hpp"
#include "alloylab/stats.hpp"

namespace alloy {

inline constexpr const char* kVersion = "0.1.0";

enum class ReferenceRule { band_center, fixed };

struct PoissonParams {
  std::vector<Interval> intervals{{0.0, 1.0}, {-2.0, -1.0}};  // unfolded units
  int max_count = 2;
  double tolerance = 0.05;
};

struct WegnerParams {
  std::vector<double> lengths{0.01, 0.05, 0.1, 0.3};  // energy units, centred at E0
  int max_order = 2;
};

struct LocalizationParams {
  double spectrum_fraction = 0.5;  // central share of the eigenvalue indices
  int mass_radius = 20;
  double mass_fraction = 0.99;
};

struct RepresentationParams {
  DecompositionParams decomposition{0.01, 0.9, 0.7, 0.6};
  double epsilon = 0.1;        // interval shift in unfolded units (truncation)
  int truncation_radius = -1;  // ℓ''; negative means ℓ'/3
};

struct WienerParams {
  int torus_size = 512;
  std::size_t grid = 128;
  std::size_t transport_samples = 0;
  int transport_bins = 20;
};

struct LemmaParams {
  std::size_t monotonicity_instances = 200;
  int monotonicity_size = 40;
  int averaging_size = 30;
  std::size_t averaging_samples = 2000;
  std::vector<double> averaging_lengths{0.01, 0.1, 0.5, 1.0};
  std::vector<double> averaging_couplings{1.0, 4.0};
  std::size_t approx_instances = 50;
  int approx_size = 60;
  int approx_radius = 10;
};

struct JointParams {
  double window = 5.0;  // |ξ| <= window
  int cells_per_axis = 4;
};

struct ExperimentConfig {
  std::string experiment;
  int dimension = 1;
  std::vector<int> box_sizes;
  double coupling = 1.0;
  std::string disorder_json;   // resolved law description
  std::string potential_json;  // resolved potential description
  ReferenceRule reference_rule = ReferenceRule::band_center;
  double reference_energy = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
  std::string output = "out";
  std::size_t ids_trials = 200;
  int ids_grid_points = 801;

  PoissonParams poisson;
  WegnerParams wegner;
  LocalizationParams localization;
  RepresentationParams representation;
  WienerParams wiener;
  LemmaParams lemmas;
  JointParams joint;

  std::string source_text;  // the configuration as supplied
};

// Validation failures throw ConfigError carrying the offending field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string resolved_config_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);  // FNV-1a 64 of the resolved config, hex

DisorderLaw build_law(const ExperimentConfig& config);
SingleSitePotential build_potential(const ExperimentConfig& config);

struct ReferenceEnergy {
  double e0 = 0.0;
  double n0 = 0.0;
  double bandwidth = 0.0;
  double n0_half_bandwidth = 0.0;    // sensitivity at h/2
  double n0_double_bandwidth = 0.0;  // and at 2h
};

// Density threshold below which a reference energy is rejected.
inline constexpr double kMinDensity = 1e-3;

ReferenceEnergy pick_reference_energy(const IdsCurve& ids, ReferenceRule rule, double fixed_energy);

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunSummary {
  std::string experiment;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;  // relative to the output directory

  bool passed() const;
  std::optional<double> metric(const std::string& key) const;
  std::string to_json() const;
};

RunSummary run(const ExperimentConfig& config);

// The Hamiltonian of main-stream trial `trial` on Λ_L, exactly as the
// pipelines build it.
HamiltonianMatrix realize_hamiltonian(const ExperimentConfig& config, int half_side, std::uint64_t trial);

// Thread count actually used for a budget (0 → hardware concurrency).
unsigned effective_threads(unsigned budget);

}  // namespace alloy
