#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "otafl/chain.hpp"
#include "otafl/messages.hpp"

namespace otafl {

/// Sliding window of the most recent rounds' messages (oldest first).
class WindowArchive {
 public:
  explicit WindowArchive(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 2) throw std::invalid_argument("WindowArchive: capacity must be >= 2");
  }

  void push(RoundMessages msgs) {
    if (!rounds_.empty() && rounds_.front().lambda_delta.size() != msgs.lambda_delta.size()) {
      throw std::invalid_argument("WindowArchive: round dimension changed");
    }
    rounds_.push_back(std::move(msgs));
    if (rounds_.size() > capacity_) rounds_.pop_front();
  }

  std::size_t size() const noexcept { return rounds_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return rounds_.size() == capacity_; }
  const RoundMessages& operator[](std::size_t i) const { return rounds_.at(i); }

 private:
  std::size_t capacity_;
  std::deque<RoundMessages> rounds_;
};

/// Backward support messages: entry w is the Bernoulli weight of the message
/// into round w's support node from round w+1 (the last round gets the
/// uninformative 1/2).
std::vector<std::vector<double>> backward_support(const WindowArchive& win,
                                                  const ChainParams& params);

/// Backward amplitude messages into each round's amplitude node; the last
/// round's message is flat (variance +inf).
void backward_amplitude(const WindowArchive& win, const ChainParams& params,
                        std::vector<std::vector<double>>& mu_back,
                        std::vector<std::vector<double>>& v_back);

/// Smoothed moments over the window: singleton support/amplitude moments per
/// round and adjacent-pair cross moments (entry w pairs rounds w and w+1).
struct PosteriorMoments {
  std::vector<std::vector<double>> e_s;
  std::vector<std::vector<double>> e_r;
  std::vector<std::vector<double>> var_r;
  std::vector<std::vector<double>> e_ss;
  std::vector<std::vector<double>> e_rr;

  std::size_t rounds() const noexcept { return e_s.size(); }
};

PosteriorMoments posterior_moments(const WindowArchive& win, const ChainParams& params);

struct EmFlags {
  bool support_denominator_degenerate = false;
  bool beta_no_root = false;
  bool beta_clamped = false;
  bool lambda_saturated = false;
};

/// One EM step over the window moments. Updates lambda, p01 (and the
/// stationarity-tied p10), the amplitude variance gamma, the innovation rate
/// beta (smaller root of the stationarity-coupled quadratic), and the tied
/// xi. epsilon is carried over unchanged.
ChainParams em_update(const PosteriorMoments& moments, const ChainParams& current,
                      EmFlags* flags = nullptr);

/// Whether the EM step runs at the end of (1-based) round t.
inline bool em_schedule(std::size_t t, std::size_t t0_window, std::size_t warmup) {
  return t >= warmup && t >= t0_window;
}

}  // namespace otafl
