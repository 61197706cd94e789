#include "altgrad/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace altgrad {

using std::numbers::pi;

EnvState EpisodicEnvironment::reset(RngStream& rng) {
  steps_ = 0;
  done_ = false;
  return do_reset(rng);
}

EnvStep EpisodicEnvironment::step(int action, RngStream& rng) {
  if (done_) throw ProtocolError("step called on a finished episode; call reset first");
  if (action < 0 || action >= spec_.num_actions) throw LookupError("invalid action");
  EnvStep out = do_step(action, rng);
  ++steps_;
  if (out.terminal) {
    done_ = true;
  } else if (steps_ >= spec_.timeout) {
    out.timed_out = true;
    done_ = true;
  }
  return out;
}

ChainEnv::ChainEnv(double noise_std, int num_actions)
    : EpisodicEnvironment(EnvSpec{num_actions, StateKind::Discrete, kStates, {}, 0.9, 100, false}),
      noise_std_(noise_std) {
  if (num_actions < 2) throw DomainError("chain needs at least two actions");
  if (noise_std < 0.0) throw DomainError("chain noise_std must be >= 0");
}

EnvState ChainEnv::do_reset(RngStream&) {
  pos_ = kStart;
  return EnvState{pos_, {}};
}

EnvStep ChainEnv::do_step(int action, RngStream& rng) {
  EnvStep out;
  pos_ += action == right_action() ? 1 : -1;
  double mean = 0.0;
  if (pos_ < 0 || pos_ >= kStates) {
    out.terminal = true;
    if (pos_ >= kStates) mean = 1.0;
  }
  out.reward = sample_gaussian(mean, noise_std_, rng);
  out.next_state.index = out.terminal ? -1 : pos_;
  return out;
}

MountainCarEnv::MountainCarEnv()
    : EpisodicEnvironment(
          EnvSpec{3, StateKind::Continuous, 0, {{-1.2, 0.5}, {-0.07, 0.07}}, 1.0, 1000, true}) {}

void MountainCarEnv::set_state(double position, double velocity) {
  pos_ = position;
  vel_ = velocity;
}

EnvState MountainCarEnv::do_reset(RngStream& rng) {
  pos_ = -0.6 + 0.2 * rng.uniform();
  vel_ = 0.0;
  return EnvState{-1, Eigen::Vector2d(pos_, vel_)};
}

EnvStep MountainCarEnv::do_step(int action, RngStream&) {
  vel_ += 0.001 * (action - 1) - 0.0025 * std::cos(3.0 * pos_);
  vel_ = std::clamp(vel_, -0.07, 0.07);
  pos_ += vel_;
  pos_ = std::clamp(pos_, -1.2, 0.5);
  if (pos_ <= -1.2 && vel_ < 0.0) vel_ = 0.0;
  EnvStep out;
  out.reward = -1.0;
  out.terminal = pos_ >= 0.5;
  out.next_state.x = Eigen::Vector2d(pos_, vel_);
  return out;
}

namespace {

constexpr double kMaxVel1 = 4 * pi;
constexpr double kMaxVel2 = 9 * pi;

Eigen::Vector4d acrobot_dsdt(const Eigen::Vector4d& s, double torque) {
  constexpr double m1 = 1.0, m2 = 1.0, l1 = 1.0, lc1 = 0.5, lc2 = 0.5, i1 = 1.0, i2 = 1.0;
  constexpr double g = 9.8;
  double t1 = s[0], t2 = s[1], dt1 = s[2], dt2 = s[3];
  double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(t2)) + i1 + i2;
  double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(t2)) + i2;
  double phi2 = m2 * lc2 * g * std::cos(t1 + t2 - pi / 2);
  double phi1 = -m2 * l1 * lc2 * dt2 * dt2 * std::sin(t2) -
                2 * m2 * l1 * lc2 * dt2 * dt1 * std::sin(t2) +
                (m1 * lc1 + m2 * l1) * g * std::cos(t1 - pi / 2) + phi2;
  double ddt2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1 * dt1 * std::sin(t2) - phi2) /
                (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  double ddt1 = -(d2 * ddt2 + phi1) / d1;
  return {dt1, dt2, ddt1, ddt2};
}

double wrap_angle(double x) {
  double w = std::fmod(x + pi, 2 * pi);
  if (w < 0) w += 2 * pi;
  return w - pi;
}

}  // namespace

AcrobotEnv::AcrobotEnv()
    : EpisodicEnvironment(EnvSpec{3,
                                  StateKind::Continuous,
                                  0,
                                  {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1},
                                   {-kMaxVel1, kMaxVel1}, {-kMaxVel2, kMaxVel2}},
                                  1.0,
                                  1000,
                                  true}) {}

EnvState AcrobotEnv::observe() const {
  Vec x(6);
  x << std::cos(s_[0]), std::sin(s_[0]), std::cos(s_[1]), std::sin(s_[1]), s_[2], s_[3];
  return EnvState{-1, x};
}

EnvState AcrobotEnv::do_reset(RngStream& rng) {
  for (int i = 0; i < 4; ++i) s_[i] = -0.1 + 0.2 * rng.uniform();
  return observe();
}

EnvStep AcrobotEnv::do_step(int action, RngStream&) {
  constexpr double dt = 0.2;
  double torque = action - 1.0;
  Eigen::Vector4d k1 = acrobot_dsdt(s_, torque);
  Eigen::Vector4d k2 = acrobot_dsdt(s_ + dt / 2 * k1, torque);
  Eigen::Vector4d k3 = acrobot_dsdt(s_ + dt / 2 * k2, torque);
  Eigen::Vector4d k4 = acrobot_dsdt(s_ + dt * k3, torque);
  s_ += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  s_[0] = wrap_angle(s_[0]);
  s_[1] = wrap_angle(s_[1]);
  s_[2] = std::clamp(s_[2], -kMaxVel1, kMaxVel1);
  s_[3] = std::clamp(s_[3], -kMaxVel2, kMaxVel2);
  EnvStep out;
  out.reward = -1.0;
  out.terminal = -std::cos(s_[0]) - std::cos(s_[1] + s_[0]) > 1.0;
  out.next_state = observe();
  return out;
}

DotReacherEnv::DotReacherEnv(Eigen::Vector2d goal)
    : EpisodicEnvironment(
          EnvSpec{9, StateKind::Continuous, 0, {{-1, 1}, {-1, 1}}, 1.0, 1000, true}),
      goal_(std::move(goal)) {}

EnvState DotReacherEnv::do_reset(RngStream& rng) {
  pos_ = Eigen::Vector2d(-1 + 2 * rng.uniform(), -1 + 2 * rng.uniform());
  return EnvState{-1, pos_};
}

EnvStep DotReacherEnv::do_step(int action, RngStream&) {
  if (action > 0) {
    double ang = (action - 1) * pi / 4;
    pos_ += kStep * Eigen::Vector2d(std::cos(ang), std::sin(ang));
    pos_ = pos_.cwiseMax(-1.0).cwiseMin(1.0);
  }
  EnvStep out;
  out.reward = -0.01;
  out.terminal = (pos_ - goal_).norm() <= kTolerance;
  out.next_state.x = pos_;
  return out;
}

NonStationaryEnv::NonStationaryEnv(std::unique_ptr<Environment> inner, ActionSwap swap)
    : inner_(std::move(inner)), is_swap_(true), swap_(swap) {
  int n = inner_->spec().num_actions;
  if (swap.a < 0 || swap.b < 0 || swap.a >= n || swap.b >= n)
    throw LookupError("action swap names an invalid action");
}

NonStationaryEnv::NonStationaryEnv(std::unique_ptr<Environment> inner, GoalMove move)
    : inner_(std::move(inner)), is_swap_(false), move_(std::move(move)) {
  if (!dynamic_cast<DotReacherEnv*>(inner_.get()))
    throw UnsupportedError("goal move needs a dot reacher environment");
}

NonStationaryEnv::NonStationaryEnv(const NonStationaryEnv& o)
    : inner_(o.inner_->clone()), is_swap_(o.is_swap_), swap_(o.swap_), move_(o.move_), t_(o.t_) {}

bool NonStationaryEnv::switched() const { return t_ >= (is_swap_ ? swap_.t0 : move_.t0); }

EnvState NonStationaryEnv::reset(RngStream& rng) { return inner_->reset(rng); }

EnvStep NonStationaryEnv::step(int action, RngStream& rng) {
  if (switched()) {
    if (is_swap_) {
      if (action == swap_.a) {
        action = swap_.b;
      } else if (action == swap_.b) {
        action = swap_.a;
      }
    } else {
      static_cast<DotReacherEnv*>(inner_.get())->set_goal(move_.goal);
    }
  }
  EnvStep out = inner_->step(action, rng);
  ++t_;
  return out;
}

std::unique_ptr<Environment> make_environment(const std::string& name, double noise_std) {
  if (name == "chain") return std::make_unique<ChainEnv>(noise_std, 2);
  if (name == "hard_chain") return std::make_unique<ChainEnv>(noise_std, 4);
  if (name == "mountaincar") return std::make_unique<MountainCarEnv>();
  if (name == "acrobot") return std::make_unique<AcrobotEnv>();
  if (name == "dotreacher") return std::make_unique<DotReacherEnv>();
  throw UnsupportedError("unknown environment '" + name + "'");
}

}  // namespace altgrad
