#include "ris/distributions.hpp"

#include <cmath>
#include <numbers>

#include "ris/errors.hpp"

namespace ris::dist {

namespace ad = ris::autodiff;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw ConfigError(std::string(what) + ": dimension mismatch (" + std::to_string(expected) + " vs " +
                      std::to_string(got) + ")");
  }
}

double tanh_correction(const Vector& action) {
  return (1.0 - action.array().square() + kTanhCorrection).log().sum();
}

}  // namespace

SquashedGaussianParams::SquashedGaussianParams(Vector mean_in, Vector log_std_in)
    : mean(std::move(mean_in)), log_std(log_std_in.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax)) {
  require_dim(mean.size(), log_std.size(), "SquashedGaussianParams");
}

SquashedSample squashed_sample(const SquashedGaussianParams& params, const Vector& noise) {
  require_dim(params.dim(), noise.size(), "squashed_sample");
  const Vector std = params.log_std.array().exp();
  const Vector pre = params.mean + std.cwiseProduct(noise);
  SquashedSample s;
  const double bound = 1.0 - kActionClamp;
  s.action = pre.array().tanh().cwiseMax(-bound).cwiseMin(bound);
  const double gaussian = (-0.5 * noise.array().square() - params.log_std.array() - kHalfLog2Pi).sum();
  s.log_prob = gaussian - tanh_correction(s.action);
  return s;
}

double squashed_log_prob(const SquashedGaussianParams& params, const Vector& action) {
  require_dim(params.dim(), action.size(), "squashed_log_prob");
  const double bound = 1.0 - kActionClamp;
  const Vector a = action.cwiseMax(-bound).cwiseMin(bound);
  const Vector pre = a.unaryExpr([](double v) { return std::atanh(v); });
  const Vector z = (pre - params.mean).array() / params.log_std.array().exp();
  const double gaussian = (-0.5 * z.array().square() - params.log_std.array() - kHalfLog2Pi).sum();
  return gaussian - tanh_correction(a);
}

DiagLaplaceParams::DiagLaplaceParams(Vector loc_in, Vector scale_in)
    : loc(std::move(loc_in)), scale(std::move(scale_in)) {
  require_dim(loc.size(), scale.size(), "DiagLaplaceParams");
  if (!(scale.array() > 0.0).all()) throw ConfigError("DiagLaplaceParams: scale must be positive");
}

DiagLaplaceParams DiagLaplaceParams::from_raw(Vector loc, const Vector& raw_log_scale) {
  return DiagLaplaceParams(std::move(loc), raw_log_scale.array().exp());
}

double laplace_log_prob(const Vector& x, const DiagLaplaceParams& params) {
  require_dim(params.dim(), x.size(), "laplace_log_prob");
  return (-(x - params.loc).array().abs() / params.scale.array() - (2.0 * params.scale.array()).log()).sum();
}

Vector laplace_sample(const DiagLaplaceParams& params, const Vector& uniform_noise) {
  require_dim(params.dim(), uniform_noise.size(), "laplace_sample");
  Vector out(params.dim());
  for (Eigen::Index i = 0; i < params.dim(); ++i) {
    const double u = uniform_noise[i];
    const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    out[i] = params.loc[i] - params.scale[i] * sign * std::log(1.0 - 2.0 * std::abs(u));
  }
  return out;
}

Var squashed_log_prob_pre_tanh(Var pre_tanh, Var mean, Var log_std) {
  Var z = ad::mul(ad::sub(pre_tanh, mean), ad::exp(ad::neg(log_std)));
  Var gaussian = ad::shift(ad::neg(ad::add(ad::scale(ad::square(z), 0.5), log_std)), -kHalfLog2Pi);
  Var action = ad::tanh(pre_tanh);
  Var correction = ad::log(ad::shift(ad::neg(ad::square(action)), 1.0 + kTanhCorrection));
  return ad::row_sum(ad::sub(gaussian, correction));
}

Var squashed_log_prob_graph(Var action, Var mean, Var log_std) {
  const double bound = 1.0 - kActionClamp;
  Var a = ad::clamp(action, -bound, bound);
  Var z = ad::mul(ad::sub(ad::atanh(a), mean), ad::exp(ad::neg(log_std)));
  Var gaussian = ad::shift(ad::neg(ad::add(ad::scale(ad::square(z), 0.5), log_std)), -kHalfLog2Pi);
  Var correction = ad::log(ad::shift(ad::neg(ad::square(a)), 1.0 + kTanhCorrection));
  return ad::row_sum(ad::sub(gaussian, correction));
}

Var laplace_log_prob_graph(Var x, Var loc, Var log_scale) {
  Var scaled = ad::mul(ad::abs(ad::sub(x, loc)), ad::exp(ad::neg(log_scale)));
  return ad::row_sum(ad::shift(ad::neg(ad::add(scaled, log_scale)), -std::log(2.0)));
}

Var laplace_rsample(Var loc, Var log_scale, const Matrix& uniform_noise) {
  const Matrix offset = uniform_noise.unaryExpr([](double u) {
    const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    return -sign * std::log(1.0 - 2.0 * std::abs(u));
  });
  return ad::add(loc, ad::mul_const(ad::exp(log_scale), offset));
}

}  // namespace ris::dist
