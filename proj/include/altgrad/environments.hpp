#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "altgrad/numerics.hpp"

namespace altgrad {

enum class StateKind { Discrete, Continuous };

struct EnvSpec {
  int num_actions = 0;
  StateKind kind = StateKind::Discrete;
  int num_states = 0;                              // discrete only
  std::vector<std::pair<double, double>> bounds;   // continuous only
  double gamma = 1.0;
  int timeout = 1;
  bool bootstrap_on_timeout = false;
};

// Discrete environments fill `index`, continuous ones fill `x`.
struct EnvState {
  int index = -1;
  Vec x;
};

struct EnvStep {
  EnvState next_state;
  double reward = 0.0;
  bool terminal = false;
  bool timed_out = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual EnvState reset(RngStream& rng) = 0;
  virtual EnvStep step(int action, RngStream& rng) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

// Shared episode bookkeeping: timeout, and refusing to step a finished episode.
class EpisodicEnvironment : public Environment {
 public:
  explicit EpisodicEnvironment(EnvSpec spec) : spec_(std::move(spec)) {}
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(RngStream& rng) final;
  EnvStep step(int action, RngStream& rng) final;
  int episode_steps() const { return steps_; }

 protected:
  virtual EnvState do_reset(RngStream& rng) = 0;
  // sets next_state, reward and terminal; timeout is handled by the caller
  virtual EnvStep do_step(int action, RngStream& rng) = 0;

  EnvSpec spec_;

 private:
  int steps_ = 0;
  bool done_ = true;
};

// Five non-terminal states s1..s5 (indices 0..4) with a terminal at each end.
// Actions: the last action moves right, every other action moves left.
class ChainEnv : public EpisodicEnvironment {
 public:
  static constexpr int kStates = 5;
  static constexpr int kStart = 2;

  explicit ChainEnv(double noise_std = 1.0, int num_actions = 2);
  std::unique_ptr<Environment> clone() const override { return std::make_unique<ChainEnv>(*this); }
  int right_action() const { return spec_.num_actions - 1; }
  double noise_std() const { return noise_std_; }

 protected:
  EnvState do_reset(RngStream& rng) override;
  EnvStep do_step(int action, RngStream& rng) override;

 private:
  double noise_std_;
  int pos_ = kStart;
};

// four actions, three of which move left
inline ChainEnv make_hard_chain(double noise_std = 1.0) { return ChainEnv(noise_std, 4); }

// Classic mountain car; actions 0 = push left, 1 = none, 2 = push right. State (position, velocity).
class MountainCarEnv : public EpisodicEnvironment {
 public:
  MountainCarEnv();
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<MountainCarEnv>(*this);
  }
  void set_state(double position, double velocity);

 protected:
  EnvState do_reset(RngStream& rng) override;
  EnvStep do_step(int action, RngStream& rng) override;

 private:
  double pos_ = -0.5;
  double vel_ = 0.0;
};

// Two-link swing-up; torque (action - 1) on the second joint.
// Observation: cos t1, sin t1, cos t2, sin t2, dt1, dt2.
class AcrobotEnv : public EpisodicEnvironment {
 public:
  AcrobotEnv();
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<AcrobotEnv>(*this);
  }
  void set_state(const Eigen::Vector4d& s) { s_ = s; }
  const Eigen::Vector4d& raw_state() const { return s_; }

 protected:
  EnvState do_reset(RngStream& rng) override;
  EnvStep do_step(int action, RngStream& rng) override;

 private:
  EnvState observe() const;
  Eigen::Vector4d s_ = Eigen::Vector4d::Zero();
};

// Point agent in [-1, 1]^2. Action 0 stays; action k in 1..8 moves 0.03 at angle (k - 1) * 45deg.
class DotReacherEnv : public EpisodicEnvironment {
 public:
  static constexpr double kStep = 0.03;
  static constexpr double kTolerance = 0.1;

  explicit DotReacherEnv(Eigen::Vector2d goal = Eigen::Vector2d::Zero());
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<DotReacherEnv>(*this);
  }
  void set_goal(const Eigen::Vector2d& g) { goal_ = g; }
  const Eigen::Vector2d& goal() const { return goal_; }
  void set_position(const Eigen::Vector2d& p) { pos_ = p; }

 protected:
  EnvState do_reset(RngStream& rng) override;
  EnvStep do_step(int action, RngStream& rng) override;

 private:
  Eigen::Vector2d goal_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
};

struct ActionSwap {
  long t0;
  int a;
  int b;
};

struct GoalMove {
  long t0;
  Eigen::Vector2d goal;
};

// Counts steps across episodes and applies the change once t0 steps have been taken.
class NonStationaryEnv : public Environment {
 public:
  NonStationaryEnv(std::unique_ptr<Environment> inner, ActionSwap swap);
  NonStationaryEnv(std::unique_ptr<Environment> inner, GoalMove move);
  NonStationaryEnv(const NonStationaryEnv& other);

  const EnvSpec& spec() const override { return inner_->spec(); }
  EnvState reset(RngStream& rng) override;
  EnvStep step(int action, RngStream& rng) override;
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<NonStationaryEnv>(*this);
  }
  long global_steps() const { return t_; }
  Environment& inner() { return *inner_; }
  bool switched() const;

 private:
  std::unique_ptr<Environment> inner_;
  bool is_swap_;
  ActionSwap swap_{};
  GoalMove move_{};
  long t_ = 0;
};

std::unique_ptr<Environment> make_environment(const std::string& name, double noise_std = 1.0);

}  // namespace altgrad
