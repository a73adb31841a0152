#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/numerics/tensor.hpp"

namespace ebgame {

struct AdamWHyperparams {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

/// AdamW optimizer state: one first/second moment buffer per parameter, in
/// the order the parameters are passed to step().
class AdamW {
 public:
  explicit AdamW(AdamWHyperparams hp = {}) : hp_(hp) {}

  const AdamWHyperparams& hyperparams() const noexcept { return hp_; }
  std::uint64_t step_count() const noexcept { return step_; }
  const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

  // Applies one update using each parameter's grad buffer.
  // Weight decay is decoupled: theta <- theta * (1 - lr * wd) before the
  // bias-corrected Adam update.
  void step(const std::vector<Tensor*>& params, double lr) {
    if (lr < 0.0) throw ContractError("adamw: negative learning rate");
    if (m_.empty()) {
      for (const Tensor* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    if (params.size() != m_.size()) throw ShapeError("adamw: parameter count changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i]->size() != m_[i].size() || params[i]->grad().size() != m_[i].size()) {
        throw ShapeError("adamw: parameter " + std::to_string(i) + " shape does not match state");
      }
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(hp_.beta1, t);
    const double bc2 = 1.0 - std::pow(hp_.beta2, t);
    const double decay = 1.0 - lr * hp_.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto theta = params[i]->data();
      auto grad = params[i]->grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < theta.size(); ++j) {
        const double gj = grad[j];
        m[j] = hp_.beta1 * m[j] + (1.0 - hp_.beta1) * gj;
        v[j] = hp_.beta2 * v[j] + (1.0 - hp_.beta2) * gj * gj;
        if (lr == 0.0) continue;
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        theta[j] = theta[j] * decay - lr * mhat / (std::sqrt(vhat) + hp_.eps);
      }
    }
  }

 private:
  AdamWHyperparams hp_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Linear warm-up from 0 to base_lr, then half-cosine decay to 0 at total_steps.
struct LrSchedule {
  double base_lr = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  LrSchedule() = default;
  LrSchedule(double base, std::size_t warmup, std::size_t total)
      : base_lr(base), warmup_steps(warmup), total_steps(total) {
    if (!(base > 0.0)) throw ConfigError("lr schedule: base_lr must be positive");
    if (total <= warmup) throw ConfigError("lr schedule: total_steps must exceed warmup_steps");
  }

  double at(std::size_t step) const {
    if (step > total_steps) {
      throw ContractError("lr schedule: step " + std::to_string(step) + " beyond total " +
                          std::to_string(total_steps));
    }
    if (step < warmup_steps) {
      return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    const double progress = static_cast<double>(step - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  }
};

inline double lr_at(const LrSchedule& sched, std::size_t step) { return sched.at(step); }

}  // namespace ebgame
