#pragma once

#include <algorithm>
#include <cassert>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "fairtax/market.hpp" // Rng
#include "fairtax/planner.hpp"

// Experience storage for the planner's learner: a plain FIFO ring buffer and
// the stratified buffer that samples uniformly across fairness brackets so
// rarely visited regions stay represented in gradient updates.

namespace fairtax {

struct Transition {
  std::vector<double> obs;
  std::vector<double> action; // components in [0, 1]
  double reward = 0.0;
  bool done = false;
  std::vector<double> next_obs;
  std::vector<double> firm_fairness; // per-firm fairness, keys the bracket
};

/// Ring buffer with uniform sampling; the ablation baseline.
class FifoReplayBuffer {
public:
  explicit FifoReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("buffer capacity must be > 0");
  }

  void add(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[next_slot_] = std::move(t);
    }
    next_slot_ = (next_slot_ + 1) % capacity_;
  }

  std::optional<std::vector<Transition>> sample(size_t batch, Rng& rng) const {
    if (storage_.empty()) return std::nullopt;
    std::uniform_int_distribution<size_t> pick(0, storage_.size() - 1);
    std::vector<Transition> out;
    out.reserve(batch);
    for (size_t i = 0; i < batch; ++i) out.push_back(storage_[pick(rng)]);
    return out;
  }

  size_t size() const { return storage_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return storage_[i]; }

private:
  size_t capacity_;
  size_t next_slot_ = 0;
  std::vector<Transition> storage_;
};

/// Stratified buffer: transitions are indexed by the fairness bracket of
/// their mean per-firm fairness, and batches draw an equal quota from every
/// non-empty bracket (with replacement). Eviction is globally oldest-first.
class FairReplayBuffer {
public:
  FairReplayBuffer(size_t capacity, int n_brackets)
      : capacity_(capacity), bracket_index_(static_cast<size_t>(n_brackets)) {
    if (capacity_ == 0) throw std::invalid_argument("buffer capacity must be > 0");
    if (n_brackets < 1) throw std::invalid_argument("need at least one bracket");
  }

  int brackets() const { return static_cast<int>(bracket_index_.size()); }
  size_t size() const { return storage_.size(); }
  size_t capacity() const { return capacity_; }

  void add(Transition t) {
    if (t.firm_fairness.empty()) {
      throw std::invalid_argument("FairReplayBuffer: transition lacks fairness info");
    }
    const double mean_fairness =
        std::accumulate(t.firm_fairness.begin(), t.firm_fairness.end(), 0.0) /
        static_cast<double>(t.firm_fairness.size());
    const int key = bracket_of(std::clamp(mean_fairness, 0.0, 1.0), brackets());

    const size_t slot = next_slot_;
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
      slot_bracket_.push_back(key);
    } else {
      // evict the globally oldest entry: it sits at the front of its own
      // bracket list because appends happen in arrival order
      const int old_key = slot_bracket_[slot];
      auto& old_list = bracket_index_[static_cast<size_t>(old_key)];
      assert(!old_list.empty() && old_list.front() == slot);
      old_list.pop_front();
      storage_[slot] = std::move(t);
      slot_bracket_[slot] = key;
    }
    bracket_index_[static_cast<size_t>(key)].push_back(slot);
    next_slot_ = (next_slot_ + 1) % capacity_;
  }

  /// Draws batch/|brackets| transitions from each bracket; the quota of empty
  /// brackets is spread evenly over the non-empty ones, and any remainder
  /// goes to the lowest-indexed non-empty brackets so the batch size is
  /// always exactly `batch`. The result is shuffled.
  std::optional<std::vector<Transition>> sample(size_t batch, Rng& rng) const {
    std::vector<size_t> occupied;
    for (size_t i = 0; i < bracket_index_.size(); ++i) {
      if (!bracket_index_[i].empty()) occupied.push_back(i);
    }
    if (occupied.empty()) return std::nullopt;

    std::vector<Transition> out;
    out.reserve(batch);
    const size_t base = batch / occupied.size();
    const size_t remainder = batch % occupied.size();
    for (size_t k = 0; k < occupied.size(); ++k) {
      const auto& list = bracket_index_[occupied[k]];
      std::uniform_int_distribution<size_t> pick(0, list.size() - 1);
      const size_t quota = base + (k < remainder ? 1 : 0);
      for (size_t i = 0; i < quota; ++i) {
        out.push_back(storage_[list[pick(rng)]]);
      }
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  }

  size_t bracket_count(int bracket) const {
    return bracket_index_[static_cast<size_t>(bracket)].size();
  }

  /// Bookkeeping invariant: the bracket lists partition the live slots.
  bool index_consistent() const {
    std::vector<int> seen(storage_.size(), 0);
    for (size_t k = 0; k < bracket_index_.size(); ++k) {
      for (size_t slot : bracket_index_[k]) {
        if (slot >= storage_.size()) return false;
        if (slot_bracket_[slot] != static_cast<int>(k)) return false;
        if (++seen[slot] > 1) return false;
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

private:
  size_t capacity_;
  size_t next_slot_ = 0;
  std::vector<Transition> storage_;
  std::vector<int> slot_bracket_;                 // bracket of each live slot
  std::vector<std::deque<size_t>> bracket_index_; // slots per bracket, oldest first
};

} // namespace fairtax
