#ifndef RIS_OPTIM_HPP_
#define RIS_OPTIM_HPP_

#include <cstdint>
#include <vector>

#include "ris/tensor.hpp"

namespace ris::autodiff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments per parameter, zero-initialized.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const ParameterSet& params);

  std::int64_t step() const { return t_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

 private:
  friend void adam_step(ParameterSet&, AdamState&, const AdamConfig&);
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

// Bias-corrected Adam update from the grads stored in `params`. Throws
// NumericalError (leaving params and state untouched) if any grad is non-finite.
void adam_step(ParameterSet& params, AdamState& state, const AdamConfig& config);

// target <- tau * online + (1 - tau) * target, elementwise.
void polyak_update(ParameterSet& target, const ParameterSet& online, double tau);

}  // namespace ris::autodiff

#endif  // RIS_OPTIM_HPP_
