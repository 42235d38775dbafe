#ifndef ALLOYLAB_H
#define ALLOYLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ALAB_API __declspec(dllexport)
#else
#define ALAB_API __attribute__((visibility("default")))
#endif

/* Status codes. Values 1..14 mirror the library's error kinds. */
enum alab_status {
  ALAB_OK = 0,
  ALAB_E_DOMAIN = 1,
  ALAB_E_INDEX = 2,
  ALAB_E_SIZING = 3,
  ALAB_E_GEOMETRY = 4,
  ALAB_E_DEGENERATE_DECOMPOSITION = 5,
  ALAB_E_INVALID_POTENTIAL = 6,
  ALAB_E_NON_INVERTIBLE_MULTIPLIER = 7,
  ALAB_E_TORUS_RESONANCE = 8,
  ALAB_E_ASSUMPTION_FAILURE = 9,
  ALAB_E_NON_CONVERGENCE = 10,
  ALAB_E_PROVENANCE = 11,
  ALAB_E_REFERENCE_ENERGY = 12,
  ALAB_E_CONFIG = 13,
  ALAB_E_IO = 14,
  ALAB_E_NULL_ARGUMENT = 98,
  ALAB_E_INTERNAL = 99
};

typedef struct alab_config alab_config;
typedef struct alab_summary alab_summary;

ALAB_API const char* alab_version(void);
ALAB_API const char* alab_status_name(int status);

/* Message of the last failure on the calling thread ("" if none). */
ALAB_API const char* alab_last_error(void);
/* Field path of the last configuration error on the calling thread. */
ALAB_API const char* alab_last_error_path(void);

ALAB_API int alab_config_load(const char* path, alab_config** out);
ALAB_API int alab_config_parse(const char* json_text, alab_config** out);
ALAB_API void alab_config_free(alab_config* config);
ALAB_API int alab_config_set_seed(alab_config* config, uint64_t seed);
ALAB_API int alab_config_set_threads(alab_config* config, unsigned threads);
ALAB_API int alab_config_set_trials(alab_config* config, size_t trials);
ALAB_API int alab_config_set_output(alab_config* config, const char* directory);
ALAB_API const char* alab_config_experiment(const alab_config* config);
/* Resolved configuration as JSON; owned by the config handle. */
ALAB_API const char* alab_config_resolved(const alab_config* config);

ALAB_API int alab_run(const alab_config* config, alab_summary** out);
ALAB_API void alab_summary_free(alab_summary* summary);
ALAB_API int alab_summary_passed(const alab_summary* summary);
ALAB_API const char* alab_summary_json(const alab_summary* summary);
ALAB_API int alab_summary_metric(const alab_summary* summary, const char* key, double* value);
ALAB_API size_t alab_summary_verdict_count(const alab_summary* summary);
ALAB_API int alab_summary_verdict(const alab_summary* summary, size_t index, const char** name, int* passed,
                                  const char** detail);

/* Assumption report, tail bounds and Wiener data of the configured potential
   as JSON. Free the string with alab_string_free. */
ALAB_API int alab_inspect_potential(const alab_config* config, int grid_points, char** report_json);

/* Writes the Hamiltonian of one trial on the box of half-side L as
   upper-triangle triplets. */
ALAB_API int alab_dump_hamiltonian(const alab_config* config, int half_side, uint64_t trial, const char* path);

ALAB_API void alab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
