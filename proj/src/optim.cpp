#include "ris/optim.hpp"

#include <cmath>
#include <string>

#include "ris/errors.hpp"

namespace ris::autodiff {

AdamState::AdamState(const ParameterSet& params) {
  for (const auto& e : params) {
    m_.emplace_back(e.param.value.shape());
    v_.emplace_back(e.param.value.shape());
  }
}

void adam_step(ParameterSet& params, AdamState& state, const AdamConfig& config) {
  if (state.m_.size() != params.size()) {
    throw ConfigError("adam_step: optimizer state holds " + std::to_string(state.m_.size()) +
                      " tensors, parameter set has " + std::to_string(params.size()));
  }
  for (const auto& e : params) {
    if (!e.param.grad.all_finite()) {
      throw NumericalError("adam_step: non-finite gradient in '" + e.name + "'");
    }
  }
  state.t_ += 1;
  const double t = static_cast<double>(state.t_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  std::size_t k = 0;
  for (auto& e : params) {
    auto p = e.param.value.data();
    auto g = e.param.grad.data();
    auto m = state.m_[k].data();
    auto v = state.v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    ++k;
  }
}

void polyak_update(ParameterSet& target, const ParameterSet& online, double tau) {
  check_compatible(target, online, "polyak_update");
  auto it = online.begin();
  for (auto& e : target) {
    auto t = e.param.value.data();
    auto o = it->param.value.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau * o[i] + (1.0 - tau) * t[i];
    ++it;
  }
}

}  // namespace ris::autodiff
