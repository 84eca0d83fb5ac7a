#include "vmirror/service.hpp"

#include <sys/socket.h>

#include <charconv>
#include <map>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "vmirror/error.hpp"
#include "vmirror/hash.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/records.hpp"
#include "vmirror/synthesis.hpp"

namespace vmirror {

namespace fs = std::filesystem;
using nlohmann::json;

FifoGate::FifoGate(int limit) : limit_(limit < 1 ? 1 : limit) {}

void FifoGate::acquire() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == serving_ && active_ < limit_; });
  ++serving_;
  ++active_;
  // The next ticket may also fit under the limit.
  cv_.notify_all();
}

void FifoGate::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_all();
}

int FifoGate::waiting() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(next_ticket_ - serving_);
}

int FifoGate::active() const {
  std::lock_guard lock(mutex_);
  return active_;
}

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

struct StoredImage {
  std::vector<std::uint8_t> png;
  Image rgb;
};

struct StoredResult {
  std::string image_id;
  std::vector<std::uint8_t> png;
};

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const std::string& body) {
  res.status = 200;
  res.set_content(body, "application/json");
}

bool is_content_id(const std::string& id) {
  return id.size() == 64 && id.find_first_not_of("0123456789abcdef") == std::string::npos;
}

Image decode_rgb(const std::vector<std::uint8_t>& png) {
  const Image8 img = decode_png(png);
  if (img.channels == 3) return to_working(img);
  Image8 rgb{img.width, img.height, 3, {}};
  rgb.data.reserve(img.data.size() * 3);
  for (std::uint8_t v : img.data) rgb.data.insert(rgb.data.end(), 3, v);
  return to_working(rgb);
}

std::string error_code_for(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 413: return "payload_too_large";
    case 415: return "unsupported_media_type";
    default: return "http_" + std::to_string(status);
  }
}

}  // namespace

struct Service::Impl {
  LatentSvmModel model;
  MakeupDB db;
  ServiceConfig config;
  SynthesisTuning tuning;
  std::string catalog;
  std::vector<std::vector<std::uint8_t>> thumbnails;

  httplib::Server server;
  std::thread thread;
  int bound_port = -1;
  FifoGate gate;

  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const StoredImage>> images;
  std::map<std::string, LandmarkSet> landmarks;
  std::map<std::string, std::shared_ptr<const StoredResult>> results;

  Impl(LatentSvmModel m, MakeupDB d, const ServiceConfig& c, const SynthesisTuning& t)
      : model(std::move(m)), db(std::move(d)), config(c), tuning(t), gate(c.workers) {
    const LabelSpace space = db.label_space();
    if (!(model.dims.labels == space)) {
      fail(ErrorKind::schema, "model/db schema mismatch: model has " + std::to_string(model.dims.labels.size()) +
                                  " labels, db has " + std::to_string(space.size()));
    }
    catalog = format_catalog(db);
    for (const auto& t : db.templates) thumbnails.push_back(encode_png(to_8bit(t.alpha)));
    if (!config.store_dir.empty()) {
      fs::create_directories(config.store_dir / "images");
      fs::create_directories(config.store_dir / "results");
    }
    routes();
  }

  // ---- store ----

  fs::path image_path(const std::string& id) const { return config.store_dir / "images" / (id + ".png"); }
  fs::path landmark_path(const std::string& id) const { return config.store_dir / "images" / (id + ".landmarks"); }
  fs::path result_path(const std::string& id) const { return config.store_dir / "results" / (id + ".png"); }
  fs::path result_source_path(const std::string& id) const { return config.store_dir / "results" / (id + ".source"); }

  std::shared_ptr<const StoredImage> find_image(const std::string& id) {
    if (!is_content_id(id)) return nullptr;
    {
      std::lock_guard lock(mutex);
      if (auto it = images.find(id); it != images.end()) return it->second;
    }
    if (config.store_dir.empty() || !fs::exists(image_path(id))) return nullptr;
    auto img = std::make_shared<StoredImage>();
    img->png = read_file(image_path(id));
    img->rgb = decode_rgb(img->png);
    std::optional<LandmarkSet> lm;
    if (fs::exists(landmark_path(id))) lm = read_landmarks(landmark_path(id));
    std::lock_guard lock(mutex);
    auto [it, inserted] = images.emplace(id, std::move(img));
    if (inserted && lm) landmarks.emplace(id, *lm);
    return it->second;
  }

  std::shared_ptr<const StoredImage> require_image(const std::string& id) {
    auto img = find_image(id);
    if (!img) throw HttpError{404, "not_found", "unknown image id '" + id + "'"};
    return img;
  }

  std::optional<LandmarkSet> find_landmarks(const std::string& id) {
    std::lock_guard lock(mutex);
    if (auto it = landmarks.find(id); it != landmarks.end()) return it->second;
    return std::nullopt;
  }

  LandmarkSet require_landmarks(const std::string& id) {
    auto lm = find_landmarks(id);
    if (!lm) throw HttpError{409, "landmarks_missing", "image '" + id + "' has no landmarks attached"};
    return *lm;
  }

  void attach_landmarks(const std::string& id, const LandmarkSet& lm) {
    if (!config.store_dir.empty()) write_landmarks(landmark_path(id), lm);
    std::lock_guard lock(mutex);
    landmarks.insert_or_assign(id, lm);
  }

  std::shared_ptr<const StoredResult> find_result(const std::string& id) {
    if (!is_content_id(id)) return nullptr;
    {
      std::lock_guard lock(mutex);
      if (auto it = results.find(id); it != results.end()) return it->second;
    }
    if (config.store_dir.empty() || !fs::exists(result_path(id)) || !fs::exists(result_source_path(id))) {
      return nullptr;
    }
    auto r = std::make_shared<StoredResult>();
    r->png = read_file(result_path(id));
    const auto src = read_file(result_source_path(id));
    r->image_id.assign(src.begin(), src.end());
    std::lock_guard lock(mutex);
    return results.emplace(id, std::move(r)).first->second;
  }

  // ---- handlers ----

  template <class F>
  auto guarded(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.message);
      } catch (const Error& e) {
        switch (e.kind()) {
          case ErrorKind::validation:
          case ErrorKind::schema: send_error(res, 422, "invalid_request", e.what()); break;
          case ErrorKind::not_found: send_error(res, 404, "not_found", e.what()); break;
          default: send_error(res, 500, "internal", e.what());
        }
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void upload(const httplib::Request& req, httplib::Response& res) {
    if (req.body.size() > config.max_upload_bytes) {
      throw HttpError{413, "payload_too_large",
                      "image exceeds the " + std::to_string(config.max_upload_bytes) + " byte limit"};
    }
    std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
    if (!looks_like_png(bytes)) throw HttpError{415, "unsupported_media_type", "body is not a PNG image"};
    const std::string id = sha256_hex(bytes);
    auto existing = find_image(id);
    if (!existing) {
      auto img = std::make_shared<StoredImage>();
      try {
        img->rgb = decode_rgb(bytes);
      } catch (const Error& e) {
        throw HttpError{415, "unsupported_media_type", std::string("undecodable PNG: ") + e.what()};
      }
      img->png = std::move(bytes);
      if (!config.store_dir.empty() && !fs::exists(image_path(id))) write_file_atomic(image_path(id), img->png);
      std::lock_guard lock(mutex);
      existing = images.emplace(id, std::move(img)).first->second;
    }
    send_json(res, json{{"image_id", id}, {"width", existing->rgb.width()}, {"height", existing->rgb.height()}}.dump());
  }

  void put_landmarks(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto img = require_image(id);
    LandmarkSet lm;
    try {
      if (req.get_header_value("Content-Type").starts_with("text/plain")) {
        lm = parse_landmarks(req.body);
        if (lm.image_width != img->rgb.width() || lm.image_height != img->rgb.height()) {
          fail(ErrorKind::validation, "landmark image size does not match the image");
        }
      } else {
        lm = parse_landmarks_json(req.body, img->rgb.width(), img->rgb.height());
      }
    } catch (const Error& e) {
      throw HttpError{422, "invalid_landmarks", e.what()};
    }
    attach_landmarks(id, lm);
    send_json(res, json{{"ok", true}}.dump());
  }

  void get_landmarks(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    require_image(id);
    auto lm = find_landmarks(id);
    if (!lm) throw HttpError{404, "landmarks_missing", "image '" + id + "' has no landmarks attached"};
    send_json(res, format_landmarks_json(*lm));
  }

  void auto_landmarks(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto img = require_image(id);
    if (config.provider_url.empty()) {
      throw HttpError{503, "provider_unavailable", "no landmark provider configured"};
    }
    static const std::regex url_re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config.provider_url, m, url_re)) {
      throw HttpError{502, "provider_failure", "unsupported provider URL '" + config.provider_url + "'"};
    }
    httplib::Client client(m[1].str(), m[2].matched ? std::stoi(m[2].str()) : 80);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    const std::string path = m[3].matched ? m[3].str() : "/";
    const std::string body(img->png.begin(), img->png.end());
    auto reply = client.Post(path, body, "image/png");
    if (!reply) throw HttpError{502, "provider_failure", "provider unreachable: " + httplib::to_string(reply.error())};
    if (reply->status != 200) {
      throw HttpError{502, "provider_failure", "provider answered with status " + std::to_string(reply->status)};
    }
    LandmarkSet lm;
    try {
      lm = parse_landmarks_json(reply->body, img->rgb.width(), img->rgb.height());
    } catch (const Error& e) {
      throw HttpError{502, "provider_failure", std::string("provider sent invalid landmarks: ") + e.what()};
    }
    attach_landmarks(id, lm);
    send_json(res, format_landmarks_json(lm));
  }

  void recommendations(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto img = require_image(id);
    int k = 5;
    if (req.has_param("k")) {
      const std::string s = req.get_param_value("k");
      auto r = std::from_chars(s.data(), s.data() + s.size(), k);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw HttpError{422, "invalid_request", "k must be an integer"};
      }
    }
    if (k < 1) throw HttpError{422, "invalid_request", "k must be >= 1"};
    const LandmarkSet lm = require_landmarks(id);
    send_json(res, format_cards(recommend(model, db, img->rgb, lm, k)));
  }

  void synthesize_route(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto img = require_image(id);
    const LandmarkSet lm = require_landmarks(id);
    MakeupSpec spec;
    try {
      spec = resolve_synthesis_request(parse_synthesis_request(req.body), &db, {}, false);
    } catch (const Error& e) {
      throw HttpError{422, "invalid_spec", e.what()};
    }
    const std::string rid = sha256_hex(id + "\n" + spec_digest(spec));
    if (!find_result(rid)) {
      gate.acquire();
      struct Release {
        FifoGate& g;
        ~Release() { g.release(); }
      } release{gate};
      if (!find_result(rid)) {
        auto r = std::make_shared<StoredResult>();
        r->image_id = id;
        r->png = encode_png(to_8bit(synthesize(img->rgb, lm, spec, tuning).after));
        if (!config.store_dir.empty()) {
          write_file_atomic(result_path(rid), r->png);
          write_text_atomic(result_source_path(rid), id);
        }
        std::lock_guard lock(mutex);
        results.emplace(rid, std::move(r));
      }
    }
    send_json(res, json{{"result_id", rid}, {"result_url", "/api/results/" + rid + ".png"}}.dump());
  }

  void compare(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    require_image(id);
    if (!req.has_param("result")) throw HttpError{422, "invalid_request", "missing 'result' parameter"};
    const std::string rid = req.get_param_value("result");
    auto r = find_result(rid);
    if (!r || r->image_id != id) throw HttpError{404, "not_found", "unknown result '" + rid + "' for this image"};
    send_json(res, json{{"before_url", "/api/images/" + id + ".png"}, {"after_url", "/api/results/" + rid + ".png"}}.dump());
  }

  static void send_png(httplib::Response& res, const std::vector<std::uint8_t>& png) {
    res.status = 200;
    res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
  }

  void routes() {
    server.set_payload_max_length(config.max_upload_bytes);
    // SO_REUSEADDR only: a busy port must fail to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const std::string message = res.status == 404 ? "no route for " + req.method + " " + req.path
                                                    : std::string(httplib::status_message(res.status));
      send_error(res, res.status, error_code_for(res.status), message);
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      send_error(res, 500, "internal", "unhandled error");
    });
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    using Req = const httplib::Request&;
    using Res = httplib::Response&;
    server.Post("/api/images", guarded([this](Req q, Res s) { upload(q, s); }));
    server.Put(R"(/api/images/([^/]+)/landmarks)", guarded([this](Req q, Res s) { put_landmarks(q, s); }));
    server.Get(R"(/api/images/([^/]+)/landmarks)", guarded([this](Req q, Res s) { get_landmarks(q, s); }));
    server.Post(R"(/api/images/([^/]+)/landmarks:auto)", guarded([this](Req q, Res s) { auto_landmarks(q, s); }));
    server.Get(R"(/api/images/([^/]+)/recommendations)", guarded([this](Req q, Res s) { recommendations(q, s); }));
    server.Post(R"(/api/images/([^/]+)/synthesize)", guarded([this](Req q, Res s) { synthesize_route(q, s); }));
    server.Get(R"(/api/images/([^/]+)/compare)", guarded([this](Req q, Res s) { compare(q, s); }));
    server.Get(R"(/api/images/([^/]+)\.png)", guarded([this](Req q, Res s) {
                 send_png(s, require_image(q.matches[1])->png);
               }));
    server.Get(R"(/api/results/([^/]+)\.png)", guarded([this](Req q, Res s) {
                 auto r = find_result(q.matches[1]);
                 if (!r) throw HttpError{404, "not_found", "unknown result '" + q.matches[1].str() + "'"};
                 send_png(s, r->png);
               }));
    server.Get("/api/catalog", guarded([this](Req, Res s) { send_json(s, catalog); }));
    server.Get(R"(/api/templates/(\d+)\.png)", guarded([this](Req q, Res s) {
                 const std::string t = q.matches[1];
                 if (t.size() > 6 || std::stoul(t) >= thumbnails.size()) {
                   throw HttpError{404, "not_found", "unknown template id " + t};
                 }
                 send_png(s, thumbnails[std::stoul(t)]);
               }));
  }
};

Service::Service(LatentSvmModel model, MakeupDB db, const ServiceConfig& config, const SynthesisTuning& tuning)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(db), config, tuning)) {}

Service::~Service() { stop(); }

int Service::start() {
  if (impl_->thread.joinable()) return impl_->bound_port;
  const auto& c = impl_->config;
  int port = -1;
  if (c.port == 0) {
    port = impl_->server.bind_to_any_port(c.host);
  } else if (impl_->server.bind_to_port(c.host, c.port)) {
    port = c.port;
  }
  if (port < 0) fail(ErrorKind::io, "cannot bind " + c.host + ":" + std::to_string(c.port) + " (address in use?)");
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

int Service::port() const { return impl_->bound_port; }

}  // namespace vmirror
