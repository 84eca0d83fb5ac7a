#include "vmirror/recommender.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/rng.hpp"

namespace vmirror {

AttributeState AttributeState::from_index(int index) {
  if (index < 0 || index >= kCount) fail(ErrorKind::validation, "attribute state out of range");
  return {index / 9, (index / 3) % 3, index % 3};
}

std::string AttributeState::describe() const {
  static const char* faces[] = {"oval", "round", "square", "heart", "long"};
  static const char* eyes[] = {"almond", "round", "hooded"};
  static const char* skins[] = {"light", "medium", "dark"};
  return std::string(faces[face]) + "/" + eyes[eye] + "/" + skins[skin];
}

// ---- joint feature layout ----

std::size_t ModelDims::dimension() const {
  const auto& s = labels;
  return static_cast<std::size_t>(features) * states +
         static_cast<std::size_t>(states) *
             (s.templates + s.eyeshadow_colors + s.lip_colors + s.foundation_colors) +
         static_cast<std::size_t>(s.eyeshadow_colors) * s.lip_colors;
}

std::size_t ModelDims::feature_offset(int state, int f) const {
  return static_cast<std::size_t>(state) * features + f;
}

std::size_t ModelDims::template_offset(int state, int t) const {
  return static_cast<std::size_t>(features) * states + static_cast<std::size_t>(state) * labels.templates + t;
}

std::size_t ModelDims::eyeshadow_offset(int state, int e) const {
  return template_offset(0, 0) + static_cast<std::size_t>(states) * labels.templates +
         static_cast<std::size_t>(state) * labels.eyeshadow_colors + e;
}

std::size_t ModelDims::lip_offset(int state, int l) const {
  return eyeshadow_offset(0, 0) + static_cast<std::size_t>(states) * labels.eyeshadow_colors +
         static_cast<std::size_t>(state) * labels.lip_colors + l;
}

std::size_t ModelDims::foundation_offset(int state, int f) const {
  return lip_offset(0, 0) + static_cast<std::size_t>(states) * labels.lip_colors +
         static_cast<std::size_t>(state) * labels.foundation_colors + f;
}

std::size_t ModelDims::pairing_offset(int e, int l) const {
  return foundation_offset(0, 0) + static_cast<std::size_t>(states) * labels.foundation_colors +
         static_cast<std::size_t>(e) * labels.lip_colors + l;
}

void ModelDims::validate() const {
  if (features < 1 || states < 1) fail(ErrorKind::validation, "model dims: features and states must be >= 1");
  labels.validate();
}

namespace {

void check_inputs(const ModelDims& dims, std::span<const double> w, std::span<const double> x) {
  if (w.size() != dims.dimension()) {
    fail(ErrorKind::validation, "weight vector has dimension " + std::to_string(w.size()) + ", expected " +
                                    std::to_string(dims.dimension()));
  }
  if (static_cast<int>(x.size()) != dims.features) {
    fail(ErrorKind::validation, "feature vector has length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(dims.features));
  }
}

// Per-state score pieces. gold != nullptr adds the per-slot Hamming loss.
struct StateTable {
  std::vector<double> base, tmpl, eye, lip, found;  // base[h], tmpl[h*T+t], ...
  std::vector<double> pair;                         // pair[e*Kl+l]
};

StateTable tabulate(const ModelDims& d, std::span<const double> w, std::span<const double> x,
                    const MakeupLabel* gold) {
  const auto& s = d.labels;
  StateTable tb;
  tb.base.resize(d.states);
  tb.tmpl.resize(static_cast<std::size_t>(d.states) * s.templates);
  tb.eye.resize(static_cast<std::size_t>(d.states) * s.eyeshadow_colors);
  tb.lip.resize(static_cast<std::size_t>(d.states) * s.lip_colors);
  tb.found.resize(static_cast<std::size_t>(d.states) * s.foundation_colors);
  tb.pair.resize(static_cast<std::size_t>(s.eyeshadow_colors) * s.lip_colors);
  for (int h = 0; h < d.states; ++h) {
    double b = 0.0;
    for (int f = 0; f < d.features; ++f) b += w[d.feature_offset(h, f)] * x[f];
    tb.base[h] = b;
    for (int t = 0; t < s.templates; ++t) {
      tb.tmpl[h * s.templates + t] = w[d.template_offset(h, t)] + (gold && t != gold->eyeshadow_template ? 1.0 : 0.0);
    }
    for (int e = 0; e < s.eyeshadow_colors; ++e) {
      tb.eye[h * s.eyeshadow_colors + e] = w[d.eyeshadow_offset(h, e)] + (gold && e != gold->eyeshadow_color ? 1.0 : 0.0);
    }
    for (int l = 0; l < s.lip_colors; ++l) {
      tb.lip[h * s.lip_colors + l] = w[d.lip_offset(h, l)] + (gold && l != gold->lip_color ? 1.0 : 0.0);
    }
    for (int f = 0; f < s.foundation_colors; ++f) {
      tb.found[h * s.foundation_colors + f] =
          w[d.foundation_offset(h, f)] + (gold && f != gold->foundation_color ? 1.0 : 0.0);
    }
  }
  for (int e = 0; e < s.eyeshadow_colors; ++e) {
    for (int l = 0; l < s.lip_colors; ++l) tb.pair[e * s.lip_colors + l] = w[d.pairing_offset(e, l)];
  }
  return tb;
}

Prediction factorized_argmax(const ModelDims& d, const StateTable& tb) {
  const auto& s = d.labels;
  Prediction best;
  best.score = -std::numeric_limits<double>::infinity();
  for (int h = 0; h < d.states; ++h) {
    int bt = 0;
    for (int t = 1; t < s.templates; ++t) {
      if (tb.tmpl[h * s.templates + t] > tb.tmpl[h * s.templates + bt]) bt = t;
    }
    int bf = 0;
    for (int f = 1; f < s.foundation_colors; ++f) {
      if (tb.found[h * s.foundation_colors + f] > tb.found[h * s.foundation_colors + bf]) bf = f;
    }
    int be = 0, bl = 0;
    double bel = -std::numeric_limits<double>::infinity();
    for (int e = 0; e < s.eyeshadow_colors; ++e) {
      for (int l = 0; l < s.lip_colors; ++l) {
        const double v = tb.eye[h * s.eyeshadow_colors + e] + tb.lip[h * s.lip_colors + l] + tb.pair[e * s.lip_colors + l];
        if (v > bel) {
          bel = v;
          be = e;
          bl = l;
        }
      }
    }
    const double total = tb.base[h] + tb.tmpl[h * s.templates + bt] + bel + tb.found[h * s.foundation_colors + bf];
    if (total > best.score) {
      best.score = total;
      best.state = h;
      best.label = {bt, be, bl, bf};
    }
  }
  return best;
}

}  // namespace

std::vector<SparseEntry> joint_feature(const ModelDims& dims, std::span<const double> x, int state,
                                       const MakeupLabel& y) {
  if (static_cast<int>(x.size()) != dims.features) fail(ErrorKind::validation, "joint_feature: feature length mismatch");
  if (state < 0 || state >= dims.states) fail(ErrorKind::validation, "joint_feature: state out of range");
  if (!dims.labels.contains(y)) fail(ErrorKind::validation, "joint_feature: label out of range");
  std::vector<SparseEntry> phi;
  phi.reserve(dims.features + 5);
  for (int f = 0; f < dims.features; ++f) phi.push_back({dims.feature_offset(state, f), x[f]});
  phi.push_back({dims.template_offset(state, y.eyeshadow_template), 1.0});
  phi.push_back({dims.eyeshadow_offset(state, y.eyeshadow_color), 1.0});
  phi.push_back({dims.lip_offset(state, y.lip_color), 1.0});
  phi.push_back({dims.foundation_offset(state, y.foundation_color), 1.0});
  phi.push_back({dims.pairing_offset(y.eyeshadow_color, y.lip_color), 1.0});
  return phi;
}

double score(const ModelDims& dims, std::span<const double> w, std::span<const double> x, int state,
             const MakeupLabel& y) {
  check_inputs(dims, w, x);
  double s = 0.0;
  for (const auto& e : joint_feature(dims, x, state, y)) s += w[e.index] * e.value;
  return s;
}

Prediction infer(const ModelDims& dims, std::span<const double> w, std::span<const double> x) {
  check_inputs(dims, w, x);
  Prediction p = factorized_argmax(dims, tabulate(dims, w, x, nullptr));
  p.score = score(dims, w, x, p.state, p.label);
  return p;
}

Prediction loss_augmented_infer(const ModelDims& dims, std::span<const double> w, std::span<const double> x,
                                const MakeupLabel& gold) {
  check_inputs(dims, w, x);
  if (!dims.labels.contains(gold)) fail(ErrorKind::validation, "loss_augmented_infer: gold label out of range");
  Prediction p = factorized_argmax(dims, tabulate(dims, w, x, &gold));
  p.score = score(dims, w, x, p.state, p.label) + hamming_loss(p.label, gold);
  return p;
}

std::vector<Prediction> top_k(const ModelDims& dims, std::span<const double> w, std::span<const double> x, int k) {
  check_inputs(dims, w, x);
  const auto& s = dims.labels;
  const int n = s.size();
  if (k < 1) fail(ErrorKind::validation, "top_k: k must be >= 1");
  k = std::min(k, n);
  const StateTable tb = tabulate(dims, w, x, nullptr);
  std::vector<Prediction> all(n);
  for (int i = 0; i < n; ++i) {
    const MakeupLabel y = s.label_at(i);
    Prediction& best = all[i];
    best.label = y;
    best.score = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < dims.states; ++h) {
      // Same summation order as score().
      double v = tb.base[h];
      v += tb.tmpl[h * s.templates + y.eyeshadow_template];
      v += tb.eye[h * s.eyeshadow_colors + y.eyeshadow_color];
      v += tb.lip[h * s.lip_colors + y.lip_color];
      v += tb.found[h * s.foundation_colors + y.foundation_color];
      v += tb.pair[y.eyeshadow_color * s.lip_colors + y.lip_color];
      if (v > best.score) {
        best.score = v;
        best.state = h;
      }
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Prediction& a, const Prediction& b) { return a.score > b.score; });
  all.resize(k);
  return all;
}

// ---- training ----

namespace {

int impute_state(const ModelDims& dims, std::span<const double> w, const TrainExample& ex) {
  int best = 0;
  double best_score = score(dims, w, ex.x, 0, ex.y);
  for (int h = 1; h < dims.states; ++h) {
    const double v = score(dims, w, ex.x, h, ex.y);
    if (v > best_score) {
      best_score = v;
      best = h;
    }
  }
  return best;
}

double hinge(const ModelDims& dims, std::span<const double> w, const TrainExample& ex, int state) {
  const Prediction p = loss_augmented_infer(dims, w, ex.x, ex.y);
  return std::max(0.0, p.score - score(dims, w, ex.x, state, ex.y));
}

double half_norm_sq(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return 0.5 * s;
}

double convex_objective(const ModelDims& dims, std::span<const double> w, std::span<const TrainExample> data,
                        std::span<const int> states, double C) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) loss += hinge(dims, w, data[i], states[i]);
  return half_norm_sq(w) + C / static_cast<double>(data.size()) * loss;
}

}  // namespace

double latent_objective(const ModelDims& dims, std::span<const double> w, std::span<const TrainExample> data,
                        double C) {
  std::vector<int> states;
  for (const auto& ex : data) states.push_back(impute_state(dims, w, ex));
  return convex_objective(dims, w, data, states, C);
}

TrainResult train_latent_svm(const ModelDims& dims, std::span<const TrainExample> data, const TrainConfig& config,
                             std::span<const int> initial_states) {
  dims.validate();
  if (data.empty()) fail(ErrorKind::validation, "train: empty dataset");
  if (!(config.C > 0.0)) fail(ErrorKind::validation, "train: C must be > 0");
  if (config.outer_iterations < 1 || config.inner_epochs < 1) {
    fail(ErrorKind::validation, "train: iteration counts must be >= 1");
  }
  for (const auto& ex : data) {
    if (static_cast<int>(ex.x.size()) != dims.features) fail(ErrorKind::validation, "train: feature length mismatch");
    if (!dims.labels.contains(ex.y)) fail(ErrorKind::validation, "train: label out of range: " + to_string(ex.y));
  }
  const std::size_t n = data.size();
  std::vector<int> states(n, 0);
  if (!initial_states.empty()) {
    if (initial_states.size() != n) fail(ErrorKind::validation, "train: initial states length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (initial_states[i] < 0 || initial_states[i] >= dims.states) {
        fail(ErrorKind::validation, "train: initial state out of range");
      }
      states[i] = initial_states[i];
    }
  }

  const double lambda = 1.0 / config.C;
  const std::size_t D = dims.dimension();
  std::vector<double> w(D, 0.0);
  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int outer = 1; outer <= config.outer_iterations; ++outer) {
    std::vector<int> previous = states;
    if (outer > 1) {
      for (std::size_t i = 0; i < n; ++i) states[i] = impute_state(dims, w, data[i]);
    }

    std::vector<double> best = w;
    double best_u = convex_objective(dims, w, data, states, config.C);
    std::vector<double> v(D, 0.0);
    long t = 0;
    for (int epoch = 0; epoch < config.inner_epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const TrainExample& ex = data[i];
        const Prediction p = loss_augmented_infer(dims, v, ex.x, ex.y);
        const bool violated = p.score > score(dims, v, ex.x, states[i], ex.y);
        const double shrink = 1.0 - eta * lambda;
        for (double& c : v) c *= shrink;
        if (violated) {
          for (const auto& e : joint_feature(dims, ex.x, states[i], ex.y)) v[e.index] += eta * e.value;
          for (const auto& e : joint_feature(dims, ex.x, p.state, p.label)) v[e.index] -= eta * e.value;
        }
      }
      const double u = convex_objective(dims, v, data, states, config.C);
      if (u < best_u) {
        best_u = u;
        best = v;
      }
    }
    w = std::move(best);
    const double f = latent_objective(dims, w, data, config.C);
    result.report.objective.push_back(f);
    result.report.outer_iterations = outer;
    if (outer > 1 && states == previous &&
        std::abs(result.report.objective[outer - 2] - f) <= config.tolerance) {
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) states[i] = impute_state(dims, w, data[i]);
  result.report.states = states;
  int correct = 0;
  for (const auto& ex : data) correct += infer(dims, w, ex.x).label == ex.y;
  result.report.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  result.w = std::move(w);
  return result;
}

AttributeState initial_attributes(std::span<const double> z) {
  if (z.size() != kFeatureCount) fail(ErrorKind::validation, "initial_attributes: expected full feature vector");
  AttributeState a;
  const double aspect = z[feature::face_aspect];
  const double jaw = z[feature::jaw_width];
  if (aspect > 0.8) {
    a.face = 4;  // long
  } else if (jaw > 0.8) {
    a.face = 2;  // square
  } else if (jaw < -0.8) {
    a.face = 3;  // heart
  } else if (aspect < -0.8) {
    a.face = 1;  // round
  }
  const double eye = 0.5 * (z[feature::left_eye_aspect] + z[feature::right_eye_aspect]);
  a.eye = eye > 0.6 ? 1 : (eye < -0.6 ? 2 : 0);
  const double lightness = z[feature::skin_mean];
  a.skin = lightness > 0.6 ? 0 : (lightness < -0.6 ? 2 : 1);
  return a;
}

ModelTraining train_model(std::span<const Annotation> annotations, const LabelSpace& labels,
                          const TrainConfig& config) {
  if (annotations.empty()) fail(ErrorKind::validation, "train: no annotated images");
  std::vector<FeatureVector> raw;
  for (const auto& a : annotations) raw.push_back(a.features);
  ModelTraining out;
  out.model.dims = {kFeatureCount, AttributeState::kCount, labels};
  out.model.standardizer = Standardizer::fit(raw);
  out.model.config = config;
  std::vector<TrainExample> data;
  std::vector<int> init;
  for (const auto& a : annotations) {
    const auto z = out.model.standardizer.apply(a.features);
    data.push_back({std::vector<double>(z.begin(), z.end()), a.label});
    init.push_back(initial_attributes(z).index());
  }
  TrainResult r = train_latent_svm(out.model.dims, data, config, init);
  out.model.w = std::move(r.w);
  out.report = std::move(r.report);
  return out;
}

// ---- persistence ----

namespace {

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    fail(ErrorKind::validation, "model: malformed number '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string format_model(const LatentSvmModel& m) {
  std::string s = "vmirror-model " + std::to_string(kModelSchemaVersion) + "\n";
  s += "features: " + std::to_string(m.dims.features) + "\n";
  s += "states: " + std::to_string(m.dims.states) + "\n";
  const auto& l = m.dims.labels;
  s += "labels: " + std::to_string(l.templates) + " " + std::to_string(l.eyeshadow_colors) + " " +
       std::to_string(l.lip_colors) + " " + std::to_string(l.foundation_colors) + "\n";
  s += "config: " + fmt(m.config.C) + " " + std::to_string(m.config.outer_iterations) + " " +
       std::to_string(m.config.inner_epochs) + " " + std::to_string(m.config.seed) + " " + fmt(m.config.tolerance) +
       "\n";
  s += "mean:";
  for (double v : m.standardizer.mean) s += " " + fmt(v);
  s += "\nscale:";
  for (double v : m.standardizer.scale) s += " " + fmt(v);
  s += "\nweights: " + std::to_string(m.w.size()) + "\n";
  for (double v : m.w) s += fmt(v) + "\n";
  return s;
}

LatentSvmModel parse_model(const std::string& text) {
  std::istringstream in(text);
  auto expect_key = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) fail(ErrorKind::validation, std::string("model: expected '") + key + "'");
  };
  auto next_token = [&]() {
    std::string tok;
    if (!(in >> tok)) fail(ErrorKind::validation, "model: unexpected end of file");
    return tok;
  };
  auto next_int = [&]() {
    const std::string tok = next_token();
    long long v = 0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
      fail(ErrorKind::validation, "model: malformed integer '" + tok + "'");
    }
    return v;
  };
  if (next_token() != "vmirror-model") fail(ErrorKind::validation, "model: not a model file");
  const long long version = next_int();
  if (version != kModelSchemaVersion) {
    fail(ErrorKind::schema, "model schema version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kModelSchemaVersion) + ")");
  }
  LatentSvmModel m;
  expect_key("features:");
  m.dims.features = static_cast<int>(next_int());
  expect_key("states:");
  m.dims.states = static_cast<int>(next_int());
  expect_key("labels:");
  m.dims.labels.templates = static_cast<int>(next_int());
  m.dims.labels.eyeshadow_colors = static_cast<int>(next_int());
  m.dims.labels.lip_colors = static_cast<int>(next_int());
  m.dims.labels.foundation_colors = static_cast<int>(next_int());
  m.dims.validate();
  if (m.dims.features != kFeatureCount || m.dims.states != AttributeState::kCount) {
    fail(ErrorKind::validation, "model: expected " + std::to_string(kFeatureCount) + " features and " +
                                    std::to_string(AttributeState::kCount) + " states");
  }
  expect_key("config:");
  m.config.C = parse_double(next_token());
  m.config.outer_iterations = static_cast<int>(next_int());
  m.config.inner_epochs = static_cast<int>(next_int());
  m.config.seed = static_cast<std::uint64_t>(std::stoull(next_token()));
  m.config.tolerance = parse_double(next_token());
  expect_key("mean:");
  for (auto& v : m.standardizer.mean) v = parse_double(next_token());
  expect_key("scale:");
  for (auto& v : m.standardizer.scale) {
    v = parse_double(next_token());
    if (!(v > 0.0)) fail(ErrorKind::validation, "model: feature scales must be > 0");
  }
  expect_key("weights:");
  const long long count = next_int();
  if (count < 0 || static_cast<std::size_t>(count) != m.dims.dimension()) {
    fail(ErrorKind::validation, "model: weight count " + std::to_string(count) + " does not match dimension " +
                                    std::to_string(m.dims.dimension()));
  }
  m.w.resize(count);
  for (auto& v : m.w) v = parse_double(next_token());
  std::string extra;
  if (in >> extra) fail(ErrorKind::validation, "model: trailing data");
  return m;
}

void save_model(const std::filesystem::path& path, const LatentSvmModel& model) {
  write_text_atomic(path, format_model(model));
}

LatentSvmModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_model(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<RecommendationCard> recommend(const LatentSvmModel& model, const MakeupDB& db, const Image& rgb,
                                          const LandmarkSet& landmarks, int k) {
  const LabelSpace space = db.label_space();
  if (!(model.dims.labels == space)) {
    const auto& a = model.dims.labels;
    fail(ErrorKind::schema, "model/db schema mismatch: model labels " + std::to_string(a.templates) + "x" +
                                std::to_string(a.eyeshadow_colors) + "x" + std::to_string(a.lip_colors) + "x" +
                                std::to_string(a.foundation_colors) + ", db labels " + std::to_string(space.templates) +
                                "x" + std::to_string(space.eyeshadow_colors) + "x" + std::to_string(space.lip_colors) +
                                "x" + std::to_string(space.foundation_colors));
  }
  if (k < 1) fail(ErrorKind::validation, "k must be >= 1");
  const auto z = model.standardizer.apply(extract_features(rgb, landmarks));
  const auto ranked = top_k(model.dims, model.w, z, k);
  std::vector<RecommendationCard> cards;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& p = ranked[i];
    RecommendationCard c;
    c.rank = static_cast<int>(i) + 1;
    c.label = p.label;
    c.attributes = AttributeState::from_index(p.state);
    c.score = p.score;
    c.template_id = db.templates[p.label.eyeshadow_template].id;
    c.eyeshadow = db.eyeshadow.centers[p.label.eyeshadow_color];
    c.lip = db.lip.centers[p.label.lip_color];
    c.foundation = db.foundation.centers[p.label.foundation_color];
    cards.push_back(c);
  }
  return cards;
}

}  // namespace vmirror
