#include "vmirror.h"

#include <cstring>
#include <memory>
#include <set>
#include <string>

#include "json.hpp"
#include "vmirror/config.hpp"
#include "vmirror/dataset.hpp"
#include "vmirror/error.hpp"
#include "vmirror/fixture_sets.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/records.hpp"
#include "vmirror/service.hpp"

using namespace vmirror;
using nlohmann::json;
namespace fs = std::filesystem;

struct vm_config {
  AppConfig config;
};

struct vm_db {
  MakeupDB db;
};

struct vm_model {
  LatentSvmModel model;
};

struct vm_server {
  std::unique_ptr<Service> service;
};

namespace {

thread_local std::string last_error;

vm_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return VM_ERR_VALIDATION;
    case ErrorKind::io: return VM_ERR_IO;
    case ErrorKind::schema: return VM_ERR_SCHEMA;
    case ErrorKind::not_found: return VM_ERR_NOT_FOUND;
    case ErrorKind::convergence: return VM_ERR_CONVERGENCE;
    case ErrorKind::runtime: return VM_ERR_RUNTIME;
  }
  return VM_ERR_RUNTIME;
}

template <class F>
vm_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return VM_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const fs::filesystem_error& e) {
    last_error = e.what();
    return VM_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
    return VM_ERR_RUNTIME;
  } catch (...) {
    last_error = "unknown error";
    return VM_ERR_RUNTIME;
  }
}

vm_status bad_argument() {
  last_error = "required argument is NULL";
  return VM_ERR_ARGUMENT;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

std::set<std::string> allowlist_of(const char* path) {
  return path ? read_allowlist(path) : std::set<std::string>{};
}

FilterResult run_filter(const AppConfig& config, const char* manifest, const char* allowlist,
                        std::vector<ManifestEntry>& entries) {
  entries = read_manifest(manifest);
  if (entries.empty()) fail(ErrorKind::validation, std::string("manifest has no entries: ") + manifest);
  const auto allow = allowlist_of(allowlist);
  return filter_manifest(entries, config.filter, allowlist ? &allow : nullptr);
}

Image read_rgb(const char* path) {
  const Image8 img = read_png(path);
  if (img.channels == 3) return to_working(img);
  Image8 rgb{img.width, img.height, 3, {}};
  for (std::uint8_t v : img.data) rgb.data.insert(rgb.data.end(), 3, v);
  return to_working(rgb);
}

LandmarkSet read_landmarks_for(const char* path, const Image& rgb) {
  LandmarkSet lm = read_landmarks(path);
  if (lm.image_width != rgb.width() || lm.image_height != rgb.height()) {
    fail(ErrorKind::validation, std::string("landmarks ") + path + " describe a " + std::to_string(lm.image_width) +
                                    "x" + std::to_string(lm.image_height) + " image, got " +
                                    std::to_string(rgb.width()) + "x" + std::to_string(rgb.height()));
  }
  return lm;
}

}  // namespace

extern "C" {

const char* vm_version(void) { return "1.0.0"; }

const char* vm_last_error(void) { return last_error.c_str(); }

const char* vm_status_name(vm_status status) {
  switch (status) {
    case VM_OK: return "ok";
    case VM_ERR_VALIDATION: return "validation";
    case VM_ERR_IO: return "io";
    case VM_ERR_SCHEMA: return "schema";
    case VM_ERR_NOT_FOUND: return "not_found";
    case VM_ERR_CONVERGENCE: return "convergence";
    case VM_ERR_RUNTIME: return "runtime";
    case VM_ERR_ARGUMENT: return "argument";
  }
  return "unknown";
}

void vm_free(char* text) { std::free(text); }

vm_status vm_config_new(vm_config** out) {
  if (!out) return bad_argument();
  return guarded([&] { *out = new vm_config{}; });
}

vm_status vm_config_load(const char* path, vm_config** out) {
  if (!path || !out) return bad_argument();
  return guarded([&] { *out = new vm_config{load_config(path)}; });
}

vm_status vm_config_set(vm_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return bad_argument();
  return guarded([&] { set_config_value(config->config, key, value); });
}

vm_status vm_config_get(const vm_config* config, const char* key, char** value) {
  if (!config || !key || !value) return bad_argument();
  return guarded([&] { put(value, get_config_value(config->config, key)); });
}

vm_status vm_config_dump(const vm_config* config, char** text) {
  if (!config || !text) return bad_argument();
  return guarded([&] { put(text, format_config(config->config)); });
}

void vm_config_free(vm_config* config) { delete config; }

vm_status vm_dataset_filter(const vm_config* config, const char* manifest, const char* allowlist, char** report,
                            int* accepted) {
  if (!config || !manifest) return bad_argument();
  return guarded([&] {
    std::vector<ManifestEntry> entries;
    const FilterResult result = run_filter(config->config, manifest, allowlist, entries);
    if (accepted) *accepted = static_cast<int>(result.accepted.size());
    put(report, format_filter_report(entries, result));
  });
}

vm_status vm_dataset_build(const vm_config* config, const char* manifest, const char* allowlist, const char* db_dir,
                           char** report) {
  if (!config || !manifest || !db_dir) return bad_argument();
  return guarded([&] {
    std::vector<ManifestEntry> entries;
    const FilterResult result = run_filter(config->config, manifest, allowlist, entries);
    if (result.accepted.empty()) fail(ErrorKind::validation, "no manifest entry passed the filter");
    BuildReport build;
    const MakeupDB db = build_db(result.accepted, config->config.build, &build);
    save_db(db, db_dir);
    put(report, format_filter_report(entries, result) + format_build_report(db, build));
  });
}

vm_status vm_db_load(const char* dir, vm_db** out) {
  if (!dir || !out) return bad_argument();
  return guarded([&] { *out = new vm_db{load_db(dir)}; });
}

vm_status vm_db_catalog(const vm_db* db, char** out) {
  if (!db || !out) return bad_argument();
  return guarded([&] { put(out, format_catalog(db->db)); });
}

void vm_db_free(vm_db* db) { delete db; }

vm_status vm_train(const vm_config* config, const vm_db* db, const char* model_path, char** summary) {
  if (!config || !db || !model_path) return bad_argument();
  return guarded([&] {
    const ModelTraining t = train_model(db->db.annotations, db->db.label_space(), config->config.train);
    save_model(model_path, t.model);
    const json s = {{"examples", db->db.annotations.size()},
                    {"labels", db->db.label_space().size()},
                    {"outer_iterations", t.report.outer_iterations},
                    {"objective", t.report.objective.empty() ? 0.0 : t.report.objective.back()},
                    {"training_accuracy", t.report.training_accuracy},
                    {"model", model_path}};
    put(summary, s.dump() + "\n");
  });
}

vm_status vm_model_load(const char* path, vm_model** out) {
  if (!path || !out) return bad_argument();
  return guarded([&] { *out = new vm_model{load_model(path)}; });
}

void vm_model_free(vm_model* model) { delete model; }

vm_status vm_recommend(const vm_model* model, const vm_db* db, const char* image_png, const char* landmarks, int k,
                       char** cards) {
  if (!model || !db || !image_png || !landmarks || !cards) return bad_argument();
  return guarded([&] {
    const Image rgb = read_rgb(image_png);
    const LandmarkSet lm = read_landmarks_for(landmarks, rgb);
    put(cards, format_cards(recommend(model->model, db->db, rgb, lm, k)));
  });
}

vm_status vm_synthesize(const vm_config* config, const vm_db* db, const char* image_png, const char* landmarks,
                        const char* spec_path, const double* intensities, const char* before_png,
                        const char* after_png, const char* stage_prefix, char** summary) {
  if (!config || !image_png || !landmarks || !spec_path || !before_png || !after_png) return bad_argument();
  return guarded([&] {
    const Image rgb = read_rgb(image_png);
    const LandmarkSet lm = read_landmarks_for(landmarks, rgb);
    const auto bytes = read_file(spec_path);
    SynthesisRequest request = parse_synthesis_request(std::string(bytes.begin(), bytes.end()));
    if (intensities) request.intensities = {intensities[0], intensities[1], intensities[2]};
    const MakeupSpec spec =
        resolve_synthesis_request(request, db ? &db->db : nullptr, fs::path(spec_path).parent_path(), true);
    const SynthesisResult result = synthesize(rgb, lm, spec, config->config.synthesis, stage_prefix != nullptr);

    const Image8 before = to_8bit(rgb);
    const Image8 after = to_8bit(result.after);
    write_png(before_png, before);
    write_png(after_png, after);
    if (stage_prefix) {
      const char* names[] = {"foundation", "eyeshadow", "lip"};
      for (std::size_t i = 0; i < result.stages.size() && i < 3; ++i) {
        write_png(std::string(stage_prefix) + "_" + names[i] + ".png", to_8bit(result.stages[i]));
      }
    }
    std::size_t changed = 0;
    for (std::size_t p = 0; p < before.data.size(); p += 3) {
      if (std::memcmp(&before.data[p], &after.data[p], 3) != 0) ++changed;
    }
    const json s = {{"before", before_png},
                    {"after", after_png},
                    {"spec_digest", spec_digest(spec)},
                    {"changed_pixels", changed}};
    put(summary, s.dump() + "\n");
  });
}

vm_status vm_server_start(const vm_config* config, const vm_model* model, const vm_db* db, vm_server** out) {
  if (!config || !model || !db || !out) return bad_argument();
  return guarded([&] {
    auto server = std::make_unique<vm_server>();
    server->service = std::make_unique<Service>(model->model, db->db, config->config.service, config->config.synthesis);
    server->service->start();
    *out = server.release();
  });
}

int vm_server_port(const vm_server* server) { return server ? server->service->port() : -1; }

void vm_server_free(vm_server* server) { delete server; }

vm_status vm_fixtures_planted(const char* dir, uint64_t seed, int total, int planted, char** summary) {
  if (!dir) return bad_argument();
  return guarded([&] {
    if (total < 1 || planted < 0 || planted > total) fail(ErrorKind::validation, "planted count must lie in [0, total]");
    const PlantedManifest m = write_planted_manifest(dir, seed, total, planted);
    json expected = json::object();
    for (const auto& [id, why] : m.expected) {
      if (!why.empty()) expected[why] = expected.value(why, 0) + 1;
    }
    put(summary, json{{"manifest", m.manifest.string()}, {"entries", m.entries.size()}, {"planted", expected}}.dump() +
                     "\n");
  });
}

vm_status vm_fixtures_looks(const char* dir, int count, uint64_t seed, char** summary) {
  if (!dir) return bad_argument();
  return guarded([&] {
    if (count < 1) fail(ErrorKind::validation, "look set needs at least one face");
    const LookSet s = write_look_set(dir, count, seed);
    put(summary, json{{"manifest", s.manifest.string()}, {"faces", s.entries.size()}}.dump() + "\n");
  });
}

vm_status vm_fixtures_sample(const char* dir) {
  if (!dir) return bad_argument();
  return guarded([&] { write_sample(dir); });
}

vm_status vm_fixtures_toy(const char* db_dir) {
  if (!db_dir) return bad_argument();
  return guarded([&] { save_db(toy_db(), db_dir); });
}

}  // extern "C"
