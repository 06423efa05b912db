#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrqn/numkit/archive.hpp"
#include "adrqn/numkit/parameter.hpp"
#include "adrqn/numkit/tensor.hpp"

namespace adrqn::replay {

using numkit::Tensor;
using ActionId = std::size_t;

/// One stored step: <{a_{t-1}, o_t}, a_t, r_t, o_{t+1}, done>.
struct Transition {
  ActionId prev_action = 0;
  Tensor obs;
  ActionId action = 0;
  double reward = 0.0;
  Tensor next_obs;
  bool done = false;
};

/// Maps any reward onto {-1, 0, +1}.
inline double clip_reward(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by sample_sequences when no closed episode is long enough.
class InsufficientReplay : public ReplayError {
 public:
  using ReplayError::ReplayError;
};

struct Episode {
  std::vector<Transition> steps;
  bool closed = false;
};

/// A contiguous slice of one stored episode. Valid until the memory is next modified.
class Window {
 public:
  Window(const Episode* episode, std::size_t start, std::size_t length)
      : episode_(episode), start_(start), length_(length) {}

  std::size_t size() const { return length_; }
  std::size_t start() const { return start_; }
  const Episode& episode() const { return *episode_; }
  const Transition& operator[](std::size_t i) const { return episode_->steps[start_ + i]; }
  bool terminal() const { return (*this)[length_ - 1].done; }

 private:
  const Episode* episode_;
  std::size_t start_;
  std::size_t length_;
};

/// Episodic replay memory with whole-episode eviction and uniform
/// (episode, offset) window sampling.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity, ActionId noop_action = 0)
      : capacity_(capacity), noop_(noop_action) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  ActionId noop_action() const { return noop_; }
  const std::deque<Episode>& episodes() const { return episodes_; }

  std::size_t closed_episodes() const {
    return static_cast<std::size_t>(
        std::count_if(episodes_.begin(), episodes_.end(), [](const Episode& e) { return e.closed; }));
  }

  /// Appends to the open episode (starting one if needed). The reward is clipped here.
  void push(Transition t) {
    if (t.obs.empty() || t.next_obs.empty()) throw ReplayError("replay push: empty observation tensor");
    const bool starting = episodes_.empty() || episodes_.back().closed;
    if (starting) {
      if (t.prev_action != noop_) {
        throw ReplayError("replay push: prev_action of an episode's first transition must be the no-op " +
                          std::to_string(noop_) + ", got " + std::to_string(t.prev_action));
      }
    } else {
      const Transition& tail = episodes_.back().steps.back();
      if (!(tail.next_obs == t.obs)) throw ReplayError("replay push: obs does not match previous next_obs");
      if (tail.action != t.prev_action) {
        throw ReplayError("replay push: prev_action " + std::to_string(t.prev_action) +
                          " does not match previous action " + std::to_string(tail.action));
      }
    }
    t.reward = clip_reward(t.reward);
    if (starting) episodes_.emplace_back();
    Episode& ep = episodes_.back();
    ep.closed = t.done;
    ep.steps.push_back(std::move(t));
    ++size_;
    if (ep.closed) ++version_;
    evict();
  }

  /// Number of (episode, offset) pairs a length-L window could be drawn from.
  std::size_t eligible_windows(std::size_t length) const {
    refresh_index(length);
    return cumulative_.empty() ? 0 : cumulative_.back();
  }

  /// Draws `batch` independent windows uniformly over eligible (episode, offset) pairs.
  std::vector<Window> sample_sequences(std::size_t batch, std::size_t length, numkit::Rng& rng) const {
    if (length == 0) throw std::invalid_argument("sample_sequences: length must be positive");
    const std::size_t total = eligible_windows(length);
    if (total == 0) {
      throw InsufficientReplay("insufficient replay: no closed episode with length >= " + std::to_string(length));
    }
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::vector<Window> out;
    out.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t u = pick(rng);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto k = static_cast<std::size_t>(it - cumulative_.begin());
      const std::size_t before = k == 0 ? 0 : cumulative_[k - 1];
      out.emplace_back(&episodes_[eligible_[k]], u - before, length);
    }
    return out;
  }

  /// Writes every stored transition under `prefix` (observations must share one shape).
  void save(numkit::TensorArchive& archive, const std::string& prefix) const {
    archive.put(prefix + "meta", Tensor::vector({static_cast<double>(capacity_), static_cast<double>(noop_),
                                                 static_cast<double>(episodes_.size())}));
    if (size_ == 0) return;
    std::vector<double> scalars;
    std::vector<Tensor> obs, next_obs;
    std::vector<double> lengths;
    for (const Episode& ep : episodes_) {
      lengths.push_back(static_cast<double>(ep.steps.size()));
      lengths.push_back(ep.closed ? 1.0 : 0.0);
      for (const Transition& t : ep.steps) {
        scalars.insert(scalars.end(), {static_cast<double>(t.prev_action), static_cast<double>(t.action), t.reward,
                                       t.done ? 1.0 : 0.0});
        obs.push_back(t.obs);
        next_obs.push_back(t.next_obs);
      }
    }
    archive.put(prefix + "episodes", Tensor(numkit::Shape{episodes_.size(), 2}, std::move(lengths)));
    archive.put(prefix + "scalars", Tensor(numkit::Shape{size_, 4}, std::move(scalars)));
    archive.put(prefix + "obs", numkit::stack(obs));
    archive.put(prefix + "next_obs", numkit::stack(next_obs));
  }

  static ReplayMemory load(const numkit::TensorArchive& archive, const std::string& prefix) {
    const Tensor& meta = archive.get(prefix + "meta");
    ReplayMemory memory(static_cast<std::size_t>(meta[0]), static_cast<ActionId>(meta[1]));
    if (meta[2] == 0.0) return memory;
    const Tensor& episodes = archive.get(prefix + "episodes");
    const Tensor& scalars = archive.get(prefix + "scalars");
    const Tensor& obs = archive.get(prefix + "obs");
    const Tensor& next_obs = archive.get(prefix + "next_obs");
    const numkit::Shape obs_shape(obs.shape().begin() + 1, obs.shape().end());
    const std::size_t obs_size = numkit::shape_size(obs_shape);
    std::size_t row = 0;
    for (std::size_t e = 0; e < episodes.dim(0); ++e) {
      Episode ep;
      ep.closed = episodes.at(e, 1) != 0.0;
      const auto n = static_cast<std::size_t>(episodes.at(e, 0));
      for (std::size_t i = 0; i < n; ++i, ++row) {
        Transition t;
        t.prev_action = static_cast<ActionId>(scalars.at(row, 0));
        t.action = static_cast<ActionId>(scalars.at(row, 1));
        t.reward = scalars.at(row, 2);
        t.done = scalars.at(row, 3) != 0.0;
        t.obs = Tensor(obs_shape, std::vector<double>(obs.data() + row * obs_size, obs.data() + (row + 1) * obs_size));
        t.next_obs = Tensor(obs_shape, std::vector<double>(next_obs.data() + row * obs_size,
                                                           next_obs.data() + (row + 1) * obs_size));
        ep.steps.push_back(std::move(t));
      }
      memory.size_ += n;
      memory.episodes_.push_back(std::move(ep));
    }
    ++memory.version_;
    return memory;
  }

 private:
  void evict() {
    while (size_ > capacity_) {
      if (episodes_.size() == 1) {
        throw ReplayError("replay: a single episode exceeds capacity " + std::to_string(capacity_));
      }
      size_ -= episodes_.front().steps.size();
      episodes_.pop_front();
      ++version_;
    }
  }

  void refresh_index(std::size_t length) const {
    if (index_length_ == length && index_version_ == version_) return;
    eligible_.clear();
    cumulative_.clear();
    std::size_t running = 0;
    for (std::size_t e = 0; e < episodes_.size(); ++e) {
      const Episode& ep = episodes_[e];
      if (!ep.closed || ep.steps.size() < length) continue;
      running += ep.steps.size() - length + 1;
      eligible_.push_back(e);
      cumulative_.push_back(running);
    }
    index_length_ = length;
    index_version_ = version_;
  }

  std::size_t capacity_;
  ActionId noop_;
  std::deque<Episode> episodes_;
  std::size_t size_ = 0;

  // Sampling index over closed episodes, rebuilt when an episode closes or is evicted.
  std::size_t version_ = 0;
  mutable std::size_t index_version_ = static_cast<std::size_t>(-1);
  mutable std::size_t index_length_ = 0;
  mutable std::vector<std::size_t> eligible_;
  mutable std::vector<std::size_t> cumulative_;
};

}  // namespace adrqn::replay
