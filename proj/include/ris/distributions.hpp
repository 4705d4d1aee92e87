#ifndef RIS_DISTRIBUTIONS_HPP_
#define RIS_DISTRIBUTIONS_HPP_

#include <Eigen/Dense>

#include "ris/tape.hpp"

namespace ris::dist {

using Vector = Eigen::VectorXd;
using autodiff::Matrix;
using autodiff::Var;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
// Added inside log(1 - tanh(u)^2 + c) so saturated actions keep a finite density.
inline constexpr double kTanhCorrection = 1e-6;
// squashed_log_prob clamps actions to +-(1 - kActionClamp) before inverting tanh.
inline constexpr double kActionClamp = 1e-6;

// tanh(N(mean, diag(exp(log_std))^2)).
struct SquashedGaussianParams {
  SquashedGaussianParams(Vector mean, Vector log_std);

  Vector mean;
  Vector log_std;  // clamped to [kLogStdMin, kLogStdMax]

  Eigen::Index dim() const { return mean.size(); }
};

struct SquashedSample {
  Vector action;
  double log_prob = 0.0;
};

// action = tanh(mean + std * noise), kept within +-(1 - kActionClamp); log_prob
// includes the tanh correction.
SquashedSample squashed_sample(const SquashedGaussianParams& params, const Vector& noise);
double squashed_log_prob(const SquashedGaussianParams& params, const Vector& action);

// Product of independent Laplace(loc_i, scale_i).
struct DiagLaplaceParams {
  DiagLaplaceParams(Vector loc, Vector scale);
  static DiagLaplaceParams from_raw(Vector loc, const Vector& raw_log_scale);

  Vector loc;
  Vector scale;

  Eigen::Index dim() const { return loc.size(); }
};

double laplace_log_prob(const Vector& x, const DiagLaplaceParams& params);
// Inverse-CDF transform of uniform noise in (-1/2, 1/2)^d.
Vector laplace_sample(const DiagLaplaceParams& params, const Vector& uniform_noise);

// Batched graph versions; one distribution per row.

// Row-wise log density of tanh-squashed Gaussians expressed through the
// pre-squash value `pre_tanh` (R x d). Returns R x 1.
Var squashed_log_prob_pre_tanh(Var pre_tanh, Var mean, Var log_std);
// Same density evaluated at squashed actions (clamped, then atanh).
Var squashed_log_prob_graph(Var action, Var mean, Var log_std);
// Row-wise Laplace log density, R x 1. `log_scale` is log(b).
Var laplace_log_prob_graph(Var x, Var loc, Var log_scale);
// Reparametrized Laplace sample; differentiable w.r.t. loc and log_scale.
Var laplace_rsample(Var loc, Var log_scale, const Matrix& uniform_noise);

}  // namespace ris::dist

#endif  // RIS_DISTRIBUTIONS_HPP_
