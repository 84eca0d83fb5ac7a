#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vmirror/features.hpp"
#include "vmirror/makeup_db.hpp"

namespace vmirror {

// Latent facial attributes: state = face * 9 + eye * 3 + skin.
struct AttributeState {
  static constexpr int kFaceShapes = 5;
  static constexpr int kEyeShapes = 3;
  static constexpr int kSkinTones = 3;
  static constexpr int kCount = kFaceShapes * kEyeShapes * kSkinTones;

  int face = 0;  // oval, round, square, heart, long
  int eye = 0;   // almond, round, hooded
  int skin = 0;  // light, medium, dark

  int index() const { return face * 9 + eye * 3 + skin; }
  static AttributeState from_index(int index);
  std::string describe() const;  // "oval/almond/light"

  friend bool operator==(const AttributeState&, const AttributeState&) = default;
};

// Sizes of the joint feature map. The full model uses 24 features and 45
// states; tests shrink both.
//
// Weight layout:
//   [features x states]                  x ⊗ onehot(h)
//   [states x (T + Ke + Kl + Kf)]        onehot(h) ⊗ onehot(slot), slot-major
//   [Ke x Kl]                            eye-shadow/lip colour pairing
struct ModelDims {
  int features = kFeatureCount;
  int states = AttributeState::kCount;
  LabelSpace labels;

  std::size_t dimension() const;
  std::size_t feature_offset(int state, int f) const;
  std::size_t template_offset(int state, int t) const;
  std::size_t eyeshadow_offset(int state, int e) const;
  std::size_t lip_offset(int state, int l) const;
  std::size_t foundation_offset(int state, int f) const;
  std::size_t pairing_offset(int e, int l) const;
  void validate() const;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct SparseEntry {
  std::size_t index;
  double value;
};

// features + 4 + 1 entries, in layout order.
std::vector<SparseEntry> joint_feature(const ModelDims& dims, std::span<const double> x, int state,
                                       const MakeupLabel& y);
double score(const ModelDims& dims, std::span<const double> w, std::span<const double> x, int state,
             const MakeupLabel& y);

struct Prediction {
  int state = 0;
  MakeupLabel label;
  double score = 0.0;  // includes the loss term for loss-augmented inference
};

// Exact argmax over states x labels. The score separates into independent
// template and foundation terms plus a joint (eye-shadow, lip) term, so each
// state costs T + Ke*Kl + Kf evaluations. Ties go to the lexicographically
// first (state, label).
Prediction infer(const ModelDims& dims, std::span<const double> w, std::span<const double> x);
Prediction loss_augmented_infer(const ModelDims& dims, std::span<const double> w, std::span<const double> x,
                                const MakeupLabel& gold);
// Distinct labels ranked by their best score over states; ties by label order.
std::vector<Prediction> top_k(const ModelDims& dims, std::span<const double> w, std::span<const double> x, int k);

struct TrainExample {
  std::vector<double> x;  // standardized features
  MakeupLabel y;
};

struct TrainConfig {
  double C = 10.0;
  int outer_iterations = 50;
  int inner_epochs = 200;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;  // early stop once states and objective settle

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  std::vector<double> objective;  // latent objective after each outer iteration
  std::vector<int> states;        // final imputed states
  int outer_iterations = 0;
  double training_accuracy = 0.0;
};

struct TrainResult {
  std::vector<double> w;
  TrainReport report;
};

// CCCP: impute latent states, then minimise the convex structural hinge
// objective 0.5 |w|^2 + C/N sum_i hinge_i with Pegasos steps 1/(lambda t),
// lambda = 1/C, visiting examples in a seeded shuffle order. The best iterate
// by the convex objective is kept, with the previous w as a candidate.
// `initial_states` seeds the first imputation (empty: all zero).
TrainResult train_latent_svm(const ModelDims& dims, std::span<const TrainExample> data, const TrainConfig& config,
                             std::span<const int> initial_states = {});

// Latent objective 0.5 |w|^2 + C/N sum_i [max_{h,y}(w.phi + loss) - max_h w.phi(x_i, h, y_i)].
double latent_objective(const ModelDims& dims, std::span<const double> w, std::span<const TrainExample> data,
                        double C);

// Heuristic attribute guess from standardized full-size features; used to
// seed the latent states so they carry their names.
AttributeState initial_attributes(std::span<const double> standardized);

constexpr int kModelSchemaVersion = 1;

struct LatentSvmModel {
  ModelDims dims;
  Standardizer standardizer;
  TrainConfig config;
  std::vector<double> w;

  friend bool operator==(const LatentSvmModel&, const LatentSvmModel&) = default;
};

struct ModelTraining {
  LatentSvmModel model;
  TrainReport report;
};

// Trains on annotated DB images.
ModelTraining train_model(std::span<const Annotation> annotations, const LabelSpace& labels,
                          const TrainConfig& config);

// Text record:
//   vmirror-model 1
//   features: F
//   states: H
//   labels: T Ke Kl Kf
//   config: C outer epochs seed tolerance
//   mean: F values
//   scale: F values
//   weights: D
//   D values, one per line
std::string format_model(const LatentSvmModel& model);
LatentSvmModel parse_model(const std::string& text);
void save_model(const std::filesystem::path& path, const LatentSvmModel& model);
LatentSvmModel load_model(const std::filesystem::path& path);

struct RecommendationCard {
  int rank = 0;
  MakeupLabel label;
  AttributeState attributes;
  double score = 0.0;
  int template_id = 0;
  Lab eyeshadow;
  Lab lip;
  Lab foundation;
};

// Errors with "model/db schema mismatch" when the label spaces differ.
std::vector<RecommendationCard> recommend(const LatentSvmModel& model, const MakeupDB& db, const Image& rgb,
                                          const LandmarkSet& landmarks, int k);

}  // namespace vmirror
