#include "alloylab/alloylab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "alloylab/disorder.hpp"
#include "alloylab/error.hpp"
#include "alloylab/harness.hpp"
#include "alloylab/wiener.hpp"
#include "json.hpp"

struct alab_config {
  alloy::ExperimentConfig config;
  std::string resolved;
};

struct alab_summary {
  alloy::RunSummary summary;
  std::string json;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_path;

int record(int status, const std::string& message, const std::string& path = {}) {
  last_error = message;
  last_path = path;
  return status;
}

// Runs f, translating exceptions into status codes.
template <class F>
int guarded(F&& f) {
  last_error.clear();
  last_path.clear();
  try {
    f();
    return ALAB_OK;
  } catch (const alloy::ConfigError& e) {
    return record(ALAB_E_CONFIG, e.what(), e.path());
  } catch (const alloy::Error& e) {
    return record(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(ALAB_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(ALAB_E_INTERNAL, e.what());
  } catch (...) {
    return record(ALAB_E_INTERNAL, "unknown failure");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void refresh(alab_config* c) { c->resolved = alloy::resolved_config_json(c->config); }

}  // namespace

extern "C" {

const char* alab_version(void) { return alloy::kVersion; }

const char* alab_status_name(int status) {
  switch (status) {
    case ALAB_OK: return "ok";
    case ALAB_E_NULL_ARGUMENT: return "null_argument";
    case ALAB_E_INTERNAL: return "internal";
    default:
      if (status >= ALAB_E_DOMAIN && status <= ALAB_E_IO)
        return alloy::error_code_name(static_cast<alloy::ErrorCode>(status));
      return "unknown";
  }
}

const char* alab_last_error(void) { return last_error.c_str(); }
const char* alab_last_error_path(void) { return last_path.c_str(); }

int alab_config_load(const char* path, alab_config** out) {
  if (!path || !out) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    auto* c = new alab_config{alloy::load_config(path), {}};
    refresh(c);
    *out = c;
  });
}

int alab_config_parse(const char* json_text, alab_config** out) {
  if (!json_text || !out) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    auto* c = new alab_config{alloy::parse_config(json_text), {}};
    refresh(c);
    *out = c;
  });
}

void alab_config_free(alab_config* config) { delete config; }

int alab_config_set_seed(alab_config* config, uint64_t seed) {
  if (!config) return record(ALAB_E_NULL_ARGUMENT, "null config");
  return guarded([&] {
    config->config.seed = seed;
    refresh(config);
  });
}

int alab_config_set_threads(alab_config* config, unsigned threads) {
  if (!config) return record(ALAB_E_NULL_ARGUMENT, "null config");
  return guarded([&] {
    config->config.threads = threads;
    refresh(config);
  });
}

int alab_config_set_trials(alab_config* config, size_t trials) {
  if (!config) return record(ALAB_E_NULL_ARGUMENT, "null config");
  if (trials == 0) return record(ALAB_E_CONFIG, "/trials: must be at least 1", "/trials");
  return guarded([&] {
    config->config.trials = trials;
    refresh(config);
  });
}

int alab_config_set_output(alab_config* config, const char* directory) {
  if (!config || !directory) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    config->config.output = directory;
    refresh(config);
  });
}

const char* alab_config_experiment(const alab_config* config) {
  return config ? config->config.experiment.c_str() : "";
}

const char* alab_config_resolved(const alab_config* config) { return config ? config->resolved.c_str() : ""; }

int alab_run(const alab_config* config, alab_summary** out) {
  if (!config || !out) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    auto* s = new alab_summary{alloy::run(config->config), {}};
    s->json = s->summary.to_json();
    *out = s;
  });
}

void alab_summary_free(alab_summary* summary) { delete summary; }

int alab_summary_passed(const alab_summary* summary) { return summary && summary->summary.passed() ? 1 : 0; }

const char* alab_summary_json(const alab_summary* summary) { return summary ? summary->json.c_str() : ""; }

int alab_summary_metric(const alab_summary* summary, const char* key, double* value) {
  if (!summary || !key || !value) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  const auto v = summary->summary.metric(key);
  if (!v) return record(ALAB_E_INDEX, std::string("no metric named '") + key + "'");
  *value = *v;
  return ALAB_OK;
}

size_t alab_summary_verdict_count(const alab_summary* summary) {
  return summary ? summary->summary.verdicts.size() : 0;
}

int alab_summary_verdict(const alab_summary* summary, size_t index, const char** name, int* passed,
                         const char** detail) {
  if (!summary) return record(ALAB_E_NULL_ARGUMENT, "null summary");
  if (index >= summary->summary.verdicts.size()) return record(ALAB_E_INDEX, "verdict index out of range");
  const auto& v = summary->summary.verdicts[index];
  if (name) *name = v.name.c_str();
  if (passed) *passed = v.passed ? 1 : 0;
  if (detail) *detail = v.detail.c_str();
  return ALAB_OK;
}

int alab_inspect_potential(const alab_config* config, int grid_points, char** report_json) {
  if (!config || !report_json) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    using nlohmann::json;
    const alloy::SingleSitePotential u = alloy::build_potential(config->config);
    const alloy::AssumptionReport a = alloy::check_assumptions(u, grid_points);
    json j;
    j["name"] = u.name();
    j["dimension"] = u.dimension();
    j["stored_radius"] = u.radius();
    j["l1_norm"] = a.l1_norm;
    j["storage_tail_l1"] = a.storage_tail_l1;
    j["min_multiplier"] = a.min_multiplier;
    j["argmin"] = a.argmin;
    j["max_multiplier"] = a.max_multiplier;
    j["passes_summability"] = a.passes_s;
    j["passes_nonvanishing"] = a.passes_h;
    j["passes_decay"] = a.passes_d;
    j["decay_fit"] = {{"valid", a.fit.valid}, {"exponent", a.fit.exponent}, {"points", a.fit.points}};
    if (a.passes_h) {
      const alloy::WienerData w = alloy::build_wiener(u);
      j["wiener"] = json::parse(alloy::wiener_report_json(u, w));
    }
    const std::string text = j.dump(2);
    *report_json = duplicate(text);
  });
}

int alab_dump_hamiltonian(const alab_config* config, int half_side, uint64_t trial, const char* path) {
  if (!config || !path) return record(ALAB_E_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    const alloy::HamiltonianMatrix h = alloy::realize_hamiltonian(config->config, half_side, trial);
    std::ofstream out(path);
    if (!out) alloy::fail(alloy::ErrorCode::io, std::string("cannot write ") + path);
    alloy::write_triplets(h, out);
    if (!out) alloy::fail(alloy::ErrorCode::io, std::string("write failed for ") + path);
  });
}

void alab_string_free(char* s) { std::free(s); }

}  // extern "C"
