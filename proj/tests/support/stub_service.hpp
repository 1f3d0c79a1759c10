#pragma once

// A local stand-in for the remote inference service.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/labels.hpp"

class StubService {
 public:
  struct Behavior {
    // Distribution for one pair, as {class: probability}.
    std::function<nlohmann::json(const bident::SequencePair&)> score;
    // The first `fail_first` requests get `fail_status`; -1 means every request.
    int fail_first = 0;
    int fail_status = 503;
    // Per-request delay drawn uniformly from [0, max_delay_ms) with this seed.
    int max_delay_ms = 0;
    unsigned delay_seed = 1;
    // Reply with one distribution too few.
    bool short_reply = false;
  };

  explicit StubService(Behavior behavior);
  ~StubService();

  StubService(const StubService&) = delete;
  StubService& operator=(const StubService&) = delete;

  std::string url() const;
  int requests() const { return requests_.load(); }
  std::vector<std::string> authorization_headers() const;
  std::vector<std::size_t> batch_sizes() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<int> requests_{0};
};
