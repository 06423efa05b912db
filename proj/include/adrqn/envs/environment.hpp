#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrqn/numkit/parameter.hpp"
#include "adrqn/numkit/tensor.hpp"

namespace adrqn::envs {

using numkit::Rng;
using numkit::Shape;
using numkit::Tensor;
using ActionId = std::size_t;

inline constexpr ActionId kNoOp = 0;

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct EnvSpec {
  Shape observation_shape;
  std::size_t num_actions = 0;
  std::size_t max_episode_length = 0;

  void validate() const {
    if (observation_shape.empty() || numkit::shape_size(observation_shape) == 0) {
      throw EnvError("environment observation shape must be non-empty");
    }
    if (num_actions < 2) throw EnvError("environment needs at least two actions");
    if (max_episode_length == 0) throw EnvError("max episode length must be positive");
  }
};

/// Diagnostics for tests and traces. Agents never see this.
struct StepInfo {
  std::vector<double> hidden_state;
  bool obscured = false;
};

struct EnvStep {
  Tensor obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Episodic environment. Randomness comes only from the generator passed in.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const EnvSpec& spec() const = 0;
  virtual Tensor reset(Rng& rng) = 0;
  virtual EnvStep step(ActionId action, Rng& rng) = 0;
  virtual bool done() const = 0;
  /// Diagnostics of the most recent reset or step.
  virtual const StepInfo& last_info() const = 0;
};

using EnvPtr = std::unique_ptr<Environment>;

/// Bookkeeping shared by the concrete environments: spec, done flag, step counter.
class EnvironmentBase : public Environment {
 public:
  explicit EnvironmentBase(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const EnvSpec& spec() const override { return spec_; }
  bool done() const override { return done_; }
  const StepInfo& last_info() const override { return info_; }
  std::size_t steps() const { return steps_; }

 protected:
  void begin_episode() {
    done_ = false;
    started_ = true;
    steps_ = 0;
  }

  void check_step(ActionId action) const {
    if (!started_) throw EnvError(name() + ": step before reset");
    if (done_) throw EnvError(name() + ": step on a finished episode, call reset first");
    if (action >= spec_.num_actions) {
      throw EnvError(name() + ": action " + std::to_string(action) + " out of range [0, " +
                     std::to_string(spec_.num_actions) + ")");
    }
  }

  /// Counts the step and ends the episode at the length limit.
  bool finish_step(bool terminal) {
    ++steps_;
    done_ = terminal || steps_ >= spec_.max_episode_length;
    return done_;
  }

  EnvSpec spec_;
  StepInfo info_;
  bool done_ = true;
  bool started_ = false;
  std::size_t steps_ = 0;
};

}  // namespace adrqn::envs
