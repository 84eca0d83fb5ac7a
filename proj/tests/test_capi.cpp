#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <thread>

#include "json.hpp"
#include "vmirror.h"

// Links only the shared library, as an external client would.

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSample = fs::path(VMIRROR_SOURCE_DIR) / "data" / "sample";

struct Text {
  char* p = nullptr;
  ~Text() { vm_free(p); }
  std::string str() const { return p ? p : ""; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config handles and status codes") {
  vm_config* cfg = nullptr;
  REQUIRE(vm_config_new(&cfg) == VM_OK);
  CHECK(vm_config_set(cfg, "filter.min_interocular", "75") == VM_OK);
  Text v;
  REQUIRE(vm_config_get(cfg, "filter.min_interocular", &v.p) == VM_OK);
  CHECK(v.str() == "75.0");
  Text host;
  REQUIRE(vm_config_get(cfg, "service.host", &host.p) == VM_OK);
  CHECK(host.str() == "127.0.0.1");

  CHECK(vm_config_set(cfg, "filter.bogus", "1") == VM_ERR_VALIDATION);
  CHECK(std::string(vm_last_error()).find("unknown key") != std::string::npos);
  CHECK(vm_config_set(cfg, nullptr, "1") == VM_ERR_ARGUMENT);
  CHECK(std::string(vm_last_error()).find("NULL") != std::string::npos);

  Text dump;
  REQUIRE(vm_config_dump(cfg, &dump.p) == VM_OK);
  CHECK(json::parse(dump.str())["filter"]["min_interocular"] == 75.0);
  CHECK(std::string(vm_last_error()).empty());

  const fs::path dir = scratch("vmirror_capi_config");
  std::ofstream(dir / "bad.json") << R"({"version": 9})";
  vm_config* loaded = nullptr;
  CHECK(vm_config_load((dir / "bad.json").c_str(), &loaded) == VM_ERR_SCHEMA);
  CHECK(loaded == nullptr);
  CHECK(vm_config_load((dir / "missing.json").c_str(), &loaded) == VM_ERR_IO);
  vm_config_free(cfg);
  CHECK(std::string(vm_status_name(VM_ERR_SCHEMA)) == "schema");
  fs::remove_all(dir);
}

TEST_CASE("last error is per thread") {
  vm_db* db = nullptr;
  CHECK(vm_db_load("/nonexistent/db", &db) != VM_OK);
  const std::string main_error = vm_last_error();
  CHECK_FALSE(main_error.empty());
  std::string other;
  std::thread([&] { other = vm_last_error(); }).join();
  CHECK(other.empty());
  CHECK(vm_last_error() == main_error);
}

TEST_CASE("toy DB trains, recommends and serves through the C API") {
  const fs::path dir = scratch("vmirror_capi_toy");
  REQUIRE(vm_fixtures_toy((dir / "db").c_str()) == VM_OK);
  vm_config* cfg = nullptr;
  REQUIRE(vm_config_new(&cfg) == VM_OK);
  vm_db* db = nullptr;
  REQUIRE(vm_db_load((dir / "db").c_str(), &db) == VM_OK);

  Text summary;
  REQUIRE(vm_train(cfg, db, (dir / "model.txt").c_str(), &summary.p) == VM_OK);
  const json s = json::parse(summary.str());
  CHECK(s["training_accuracy"] == 1.0);
  CHECK(s["examples"] == 8);

  vm_model* model = nullptr;
  REQUIRE(vm_model_load((dir / "model.txt").c_str(), &model) == VM_OK);
  const std::string face = (kSample / "face.png").string();
  const std::string lm = (kSample / "face.landmarks").string();
  Text cards;
  REQUIRE(vm_recommend(model, db, face.c_str(), lm.c_str(), 3, &cards.p) == VM_OK);
  CHECK(json::parse(cards.str()).size() == 3);
  Text none;
  CHECK(vm_recommend(model, db, face.c_str(), lm.c_str(), 0, &none.p) == VM_ERR_VALIDATION);
  CHECK(none.p == nullptr);

  Text catalog;
  REQUIRE(vm_db_catalog(db, &catalog.p) == VM_OK);
  CHECK(json::parse(catalog.str())["templates"].size() == 2);

  REQUIRE(vm_config_set(cfg, "service.port", "0") == VM_OK);
  vm_server* server = nullptr;
  REQUIRE(vm_server_start(cfg, model, db, &server) == VM_OK);
  CHECK(vm_server_port(server) > 0);
  vm_server_free(server);

  vm_model_free(model);
  vm_db_free(db);
  vm_config_free(cfg);
  fs::remove_all(dir);
}

TEST_CASE("synthesis writes a before/after pair") {
  const fs::path dir = scratch("vmirror_capi_synth");
  vm_config* cfg = nullptr;
  REQUIRE(vm_config_new(&cfg) == VM_OK);
  const std::string face = (kSample / "face.png").string();
  const std::string lm = (kSample / "face.landmarks").string();
  const std::string spec = (kSample / "spec.json").string();
  const std::string before = (dir / "before.png").string();
  const std::string after = (dir / "after.png").string();
  const std::string stages = (dir / "stage").string();

  Text summary;
  REQUIRE(vm_synthesize(cfg, nullptr, face.c_str(), lm.c_str(), spec.c_str(), nullptr, before.c_str(), after.c_str(),
                        stages.c_str(), &summary.p) == VM_OK);
  CHECK(json::parse(summary.str())["changed_pixels"].get<int>() > 0);
  CHECK(slurp(before) != slurp(after));
  for (const char* stage : {"foundation", "eyeshadow", "lip"}) {
    CHECK(fs::exists(dir / (std::string("stage_") + stage + ".png")));
  }

  const double zero[3] = {0, 0, 0};
  REQUIRE(vm_synthesize(cfg, nullptr, face.c_str(), lm.c_str(), spec.c_str(), zero, before.c_str(), after.c_str(),
                        nullptr, nullptr) == VM_OK);
  CHECK(slurp(before) == slurp(after));

  // Palette indices need a DB.
  std::ofstream(dir / "indexed.json") << R"({"template": 0, "eyeshadow_color": 0, "lip_color": 0, "foundation_color": 0})";
  CHECK(vm_synthesize(cfg, nullptr, face.c_str(), lm.c_str(), (dir / "indexed.json").c_str(), nullptr, before.c_str(),
                      after.c_str(), nullptr, nullptr) == VM_ERR_VALIDATION);
  vm_config_free(cfg);
  fs::remove_all(dir);
}

TEST_CASE("planted fixture summary counts the plants") {
  const fs::path dir = scratch("vmirror_capi_planted");
  Text summary;
  REQUIRE(vm_fixtures_planted(dir.c_str(), 7, 100, 37, &summary.p) == VM_OK);
  const json s = json::parse(summary.str());
  int planted = 0;
  for (const auto& [reason, n] : s["planted"].items()) planted += n.get<int>();
  CHECK(planted == 37);

  vm_config* cfg = nullptr;
  REQUIRE(vm_config_new(&cfg) == VM_OK);
  int accepted = -1;
  Text report;
  REQUIRE(vm_dataset_filter(cfg, s["manifest"].get<std::string>().c_str(), nullptr, &report.p, &accepted) == VM_OK);
  CHECK(accepted == 63);
  CHECK(vm_fixtures_planted(dir.c_str(), 7, 10, 11, nullptr) == VM_ERR_VALIDATION);
  vm_config_free(cfg);
  fs::remove_all(dir);
}
