#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>

#include "vmirror/config.hpp"
#include "vmirror/makeup_db.hpp"
#include "vmirror/recommender.hpp"

namespace vmirror {

// Counting gate that admits waiters strictly in arrival order.
class FifoGate {
 public:
  explicit FifoGate(int limit);

  void acquire();
  void release();
  int waiting() const;
  int active() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
  int active_ = 0;
  int limit_;
};

// HTTP front end over a fixed model and DB. Routes are documented in
// docs/api.md. The model and DB are read-only for the service's lifetime.
class Service {
 public:
  // Throws a schema Error when the model and DB label spaces differ.
  Service(LatentSvmModel model, MakeupDB db, const ServiceConfig& config, const SynthesisTuning& tuning = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds config.host:config.port (port 0 picks a free one) and serves on a
  // background thread. Returns the bound port; throws an io Error when the
  // address is unavailable.
  int start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vmirror
