#ifndef VMIRROR_H
#define VMIRROR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VM_API
#else
#define VM_API __attribute__((visibility("default")))
#endif

/* Every fallible call returns a status; on failure vm_last_error() holds a
   message for the calling thread until its next vm_* call. Strings returned
   through char** out-parameters are owned by the caller and released with
   vm_free(). */
typedef enum vm_status {
  VM_OK = 0,
  VM_ERR_VALIDATION = 1,
  VM_ERR_IO = 2,
  VM_ERR_SCHEMA = 3,
  VM_ERR_NOT_FOUND = 4,
  VM_ERR_CONVERGENCE = 5,
  VM_ERR_RUNTIME = 6,
  VM_ERR_ARGUMENT = 7
} vm_status;

typedef struct vm_config vm_config;
typedef struct vm_db vm_db;
typedef struct vm_model vm_model;
typedef struct vm_server vm_server;

VM_API const char* vm_version(void);
VM_API const char* vm_last_error(void);
VM_API const char* vm_status_name(vm_status status);
VM_API void vm_free(char* text);

/* Configuration: defaults, a versioned JSON file, then dotted overrides such
   as ("filter.min_interocular", "55"). */
VM_API vm_status vm_config_new(vm_config** out);
VM_API vm_status vm_config_load(const char* path, vm_config** out);
VM_API vm_status vm_config_set(vm_config* config, const char* key, const char* value);
/* String values come back as plain text, others as JSON literals. */
VM_API vm_status vm_config_get(const vm_config* config, const char* key, char** value);
VM_API vm_status vm_config_dump(const vm_config* config, char** text);
VM_API void vm_config_free(vm_config* config);

/* Dataset preparation. Reports are line-delimited JSON. allowlist may be NULL. */
VM_API vm_status vm_dataset_filter(const vm_config* config, const char* manifest, const char* allowlist,
                                   char** report, int* accepted);
VM_API vm_status vm_dataset_build(const vm_config* config, const char* manifest, const char* allowlist,
                                  const char* db_dir, char** report);

VM_API vm_status vm_db_load(const char* dir, vm_db** out);
VM_API vm_status vm_db_catalog(const vm_db* db, char** json);
VM_API void vm_db_free(vm_db* db);

/* Trains on the DB annotations and writes the model file; summary is one
   JSON line. */
VM_API vm_status vm_train(const vm_config* config, const vm_db* db, const char* model_path, char** summary);
VM_API vm_status vm_model_load(const char* path, vm_model** out);
VM_API void vm_model_free(vm_model* model);

/* Ranked cards as a JSON array, identical to the HTTP recommendations body. */
VM_API vm_status vm_recommend(const vm_model* model, const vm_db* db, const char* image_png, const char* landmarks,
                              int k, char** cards);

/* Applies a synthesis request file. db may be NULL when the request names no
   DB entries; intensities (foundation, eye shadow, lip) override the file
   when non-NULL; stage_prefix, when non-NULL, receives one PNG per stage. */
VM_API vm_status vm_synthesize(const vm_config* config, const vm_db* db, const char* image_png,
                               const char* landmarks, const char* spec_path, const double* intensities,
                               const char* before_png, const char* after_png, const char* stage_prefix,
                               char** summary);

/* Binds the configured address and serves on a background thread. */
VM_API vm_status vm_server_start(const vm_config* config, const vm_model* model, const vm_db* db, vm_server** out);
VM_API int vm_server_port(const vm_server* server);
VM_API void vm_server_free(vm_server* server);

/* Procedural fixture sets. */
VM_API vm_status vm_fixtures_planted(const char* dir, uint64_t seed, int total, int planted, char** summary);
VM_API vm_status vm_fixtures_looks(const char* dir, int count, uint64_t seed, char** summary);
VM_API vm_status vm_fixtures_sample(const char* dir);
VM_API vm_status vm_fixtures_toy(const char* db_dir);

#ifdef __cplusplus
}
#endif

#endif
