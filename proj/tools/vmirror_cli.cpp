// Command-line front end. Talks to the library only through the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "vmirror.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

int exit_code(vm_status s) {
  switch (s) {
    case VM_OK: return kExitOk;
    case VM_ERR_VALIDATION:
    case VM_ERR_SCHEMA:
    case VM_ERR_ARGUMENT: return kExitValidation;
    default: return kExitRuntime;
  }
}

struct Failure {
  vm_status status;
};

void check(vm_status s) {
  if (s != VM_OK) throw Failure{s};
}

// Owns a malloc'd string returned through the C API.
struct Text {
  char* p = nullptr;
  ~Text() { vm_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() {
    if (p) Free(p);
  }
};

using Config = Handle<vm_config, vm_config_free>;
using Db = Handle<vm_db, vm_db_free>;
using Model = Handle<vm_model, vm_model_free>;
using Server = Handle<vm_server, vm_server_free>;

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;
};

// A flag that overrides one config key; flags are applied after the config file.
void tunable(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
         flag, [&o, key](const std::string& v) { o.values.emplace_back(key, v); }, help + " [" + key + "]")
      ->type_name("VALUE");
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{VM_ERR_IO};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual mirror: makeup knowledge base, recommendation and synthesis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vm_version()));

  std::string config_path;
  std::vector<std::string> sets;
  Overrides o;
  app.add_option("--config", config_path, "Versioned JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override a config value, KEY=VALUE with a dotted key (repeatable)");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Filter a manifest and build the makeup DB");
  dataset->require_subcommand(1);
  std::string manifest, allowlist, report, db_dir;
  auto common_dataset = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest, "Manifest (JSON lines)")->required();
    sub->add_option("--allowlist", allowlist, "Optional file of accepted image ids, one per line");
    sub->add_option("--report", report, "Write the report here instead of stdout");
    tunable(sub, o, "--detector-confidence", "filter.detector_confidence", "Minimum detector confidence");
    tunable(sub, o, "--landmark-confidence", "filter.landmark_confidence", "Minimum landmark confidence");
    tunable(sub, o, "--min-face-size", "filter.min_face_size", "Minimum face size in px");
    tunable(sub, o, "--min-interocular", "filter.min_interocular", "Minimum inter-ocular distance in px");
    tunable(sub, o, "--min-frontality", "filter.min_frontality", "Minimum frontality ratio");
  };
  auto* filter = dataset->add_subcommand("filter", "Apply the acceptance rules and report per-entry outcomes");
  common_dataset(filter);
  auto* build = dataset->add_subcommand("build", "Filter, then extract templates and palettes into a DB");
  common_dataset(build);
  build->add_option("--db", db_dir, "Output DB directory")->required();
  tunable(build, o, "--seed", "build.seed", "Clustering seed");
  tunable(build, o, "--max-templates", "build.max_templates", "Template cap");
  tunable(build, o, "--foundation-k", "build.foundation_k", "Foundation palette size");
  tunable(build, o, "--eyeshadow-k", "build.eyeshadow_k", "Eye-shadow palette size");
  tunable(build, o, "--lip-k", "build.lip_k", "Lip palette size");
  tunable(build, o, "--components", "build.matting.components", "Matting components per eye");
  tunable(build, o, "--eigenvectors", "build.matting.eigenvectors", "Matting eigenvectors per eye");

  // train
  auto* train = app.add_subcommand("train", "Train the recommender on the DB annotations");
  std::string model_path;
  train->add_option("--db", db_dir, "DB directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--model", model_path, "Output model file")->required();
  tunable(train, o, "--C", "train.C", "Regularization trade-off");
  tunable(train, o, "--outer-iterations", "train.outer_iterations", "Latent imputation rounds");
  tunable(train, o, "--epochs", "train.inner_epochs", "Inner solver epochs");
  tunable(train, o, "--seed", "train.seed", "Shuffle seed");

  // recommend
  auto* rec = app.add_subcommand("recommend", "Rank makeup labels for a face");
  std::string image, landmarks;
  int k = 1;
  rec->add_option("--model", model_path, "Model file")->required();
  rec->add_option("--db", db_dir, "DB directory")->required();
  rec->add_option("--image", image, "Face PNG")->required();
  rec->add_option("--landmarks", landmarks, "Landmark document")->required();
  rec->add_option("-k", k, "Number of cards")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Apply a makeup spec and write before/after PNGs");
  std::string spec_path, before_path, after_path, stages;
  std::vector<double> intensity;
  synth->add_option("--image", image, "Face PNG")->required();
  synth->add_option("--landmarks", landmarks, "Landmark document")->required();
  synth->add_option("--spec", spec_path, "Synthesis request (JSON)")->required();
  synth->add_option("--db", db_dir, "DB directory, needed when the spec names DB entries");
  synth->add_option("--before", before_path, "Output PNG of the input")->required();
  synth->add_option("--after", after_path, "Output PNG with makeup")->required();
  synth->add_option("--stages", stages, "Also write <prefix>_{foundation,eyeshadow,lip}.png");
  synth->add_option("--intensity", intensity, "Override intensities: foundation,eyeshadow,lip")
      ->delimiter(',')
      ->expected(3);
  tunable(synth, o, "--feather", "synthesis.feather", "Mask feather in px");
  tunable(synth, o, "--smoothing-radius", "synthesis.smoothing_radius", "Foundation filter radius at 160 px IOD");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API until interrupted");
  tunable(serve, o, "--model", "service.model", "Model file");
  tunable(serve, o, "--db", "service.db", "DB directory");
  tunable(serve, o, "--host", "service.host", "Listen address");
  tunable(serve, o, "--port", "service.port", "Listen port (0 picks one)");
  tunable(serve, o, "--provider-url", "service.provider_url", "Landmark provider endpoint");
  tunable(serve, o, "--workers", "service.workers", "Concurrent synthesis jobs");
  tunable(serve, o, "--max-upload", "service.max_upload_bytes", "Upload size cap in bytes");
  tunable(serve, o, "--store-dir", "service.store_dir", "Persist images and results here");

  // config
  auto* show = app.add_subcommand("config", "Print the effective configuration");

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "Write procedural fixture sets");
  fixtures->require_subcommand(1);
  std::string out_dir;
  std::uint64_t seed = 0;
  int total = 100, planted = 37, count = 12;
  auto* fx_planted = fixtures->add_subcommand("planted", "Manifest with planted filter faults");
  fx_planted->add_option("--out", out_dir, "Output directory")->required();
  fx_planted->add_option("--seed", seed, "Seed")->default_val(7);
  fx_planted->add_option("--total", total, "Entries")->capture_default_str();
  fx_planted->add_option("--planted", planted, "Faulty entries")->capture_default_str();
  auto* fx_looks = fixtures->add_subcommand("looks", "Faces painted with the reference looks");
  fx_looks->add_option("--out", out_dir, "Output directory")->required();
  fx_looks->add_option("--count", count, "Faces")->capture_default_str();
  fx_looks->add_option("--seed", seed, "Seed")->default_val(11);
  auto* fx_sample = fixtures->add_subcommand("sample", "Sample face, landmarks, template and spec");
  fx_sample->add_option("--out", out_dir, "Output directory")->required();
  auto* fx_toy = fixtures->add_subcommand("toy", "Eight-example separable training DB");
  fx_toy->add_option("--out", out_dir, "Output DB directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    Config cfg;
    if (config_path.empty()) {
      check(vm_config_new(&cfg.p));
    } else {
      check(vm_config_load(config_path.c_str(), &cfg.p));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects KEY=VALUE, got '" << s << "'\n";
        return kExitValidation;
      }
      check(vm_config_set(cfg.p, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }
    for (const auto& [key, value] : o.values) check(vm_config_set(cfg.p, key.c_str(), value.c_str()));

    const char* allow = allowlist.empty() ? nullptr : allowlist.c_str();
    if (filter->parsed()) {
      Text text;
      int accepted = 0;
      check(vm_dataset_filter(cfg.p, manifest.c_str(), allow, &text.p, &accepted));
      emit(text.str(), report);
    } else if (build->parsed()) {
      Text text;
      check(vm_dataset_build(cfg.p, manifest.c_str(), allow, db_dir.c_str(), &text.p));
      emit(text.str(), report);
    } else if (train->parsed()) {
      Db db;
      check(vm_db_load(db_dir.c_str(), &db.p));
      Text text;
      check(vm_train(cfg.p, db.p, model_path.c_str(), &text.p));
      emit(text.str(), "");
    } else if (rec->parsed()) {
      Model model;
      check(vm_model_load(model_path.c_str(), &model.p));
      Db db;
      check(vm_db_load(db_dir.c_str(), &db.p));
      Text text;
      check(vm_recommend(model.p, db.p, image.c_str(), landmarks.c_str(), k, &text.p));
      emit(text.str() + "\n", "");
    } else if (synth->parsed()) {
      Db db;
      if (!db_dir.empty()) check(vm_db_load(db_dir.c_str(), &db.p));
      Text text;
      check(vm_synthesize(cfg.p, db.p, image.c_str(), landmarks.c_str(), spec_path.c_str(),
                          intensity.empty() ? nullptr : intensity.data(), before_path.c_str(), after_path.c_str(),
                          stages.empty() ? nullptr : stages.c_str(), &text.p));
      emit(text.str(), "");
    } else if (serve->parsed()) {
      auto value = [&](const char* key) {
        Text t;
        check(vm_config_get(cfg.p, key, &t.p));
        return t.str();
      };
      const std::string model_file = value("service.model");
      const std::string db_path = value("service.db");
      if (model_file.empty() || db_path.empty()) {
        std::cerr << "error: serve needs --model and --db (or service.model / service.db in the config)\n";
        return kExitValidation;
      }
      Model model;
      check(vm_model_load(model_file.c_str(), &model.p));
      Db db;
      check(vm_db_load(db_path.c_str(), &db.p));

      // Block the stop signals before the server threads start so they are
      // delivered to sigwait below.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

      Server server;
      check(vm_server_start(cfg.p, model.p, db.p, &server.p));
      std::cout << "{\"listening\": " << vm_server_port(server.p) << "}" << std::endl;
      int sig = 0;
      sigwait(&stop_signals, &sig);
    } else if (show->parsed()) {
      Text dump;
      check(vm_config_dump(cfg.p, &dump.p));
      emit(dump.str(), "");
    } else if (fx_planted->parsed()) {
      Text text;
      check(vm_fixtures_planted(out_dir.c_str(), seed, total, planted, &text.p));
      emit(text.str(), "");
    } else if (fx_looks->parsed()) {
      Text text;
      check(vm_fixtures_looks(out_dir.c_str(), count, seed, &text.p));
      emit(text.str(), "");
    } else if (fx_sample->parsed()) {
      check(vm_fixtures_sample(out_dir.c_str()));
    } else if (fx_toy->parsed()) {
      check(vm_fixtures_toy(out_dir.c_str()));
    }
    return kExitOk;
  } catch (const Failure& f) {
    const std::string msg = vm_last_error();
    if (!msg.empty()) std::cerr << "error (" << vm_status_name(f.status) << "): " << msg << "\n";
    return exit_code(f.status);
  }
}
