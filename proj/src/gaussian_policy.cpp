#include "trdrl/gaussian_policy.hpp"

#include <cmath>
#include <stdexcept>

namespace trdrl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*ln(2*pi)
constexpr double kLog2 = 0.69314718055994530942;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GaussianPolicyOutput squash_sample(const Vec& raw, const Vec& noise,
                                   const LogStdBounds& bounds) {
  if (raw.size() % 2 != 0) throw std::invalid_argument("squash_sample: odd raw size");
  Eigen::Index m = raw.size() / 2;
  if (noise.size() != m) throw std::invalid_argument("squash_sample: noise size mismatch");
  GaussianPolicyOutput out;
  out.mean = raw.head(m);
  out.noise = noise;
  out.log_std.resize(m);
  out.pre_tanh.resize(m);
  out.action.resize(m);
  double logp = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double ls = bounds.lo + 0.5 * (bounds.hi - bounds.lo) * (std::tanh(raw(m + i)) + 1.0);
    out.log_std(i) = ls;
    double u = out.mean(i) + std::exp(ls) * noise(i);
    out.pre_tanh(i) = u;
    out.action(i) = std::tanh(u);
    // log N(u; mean, std) with the tanh change-of-variables correction,
    // using log(1 - tanh(u)^2) = 2*(log2 - u - softplus(-2u)).
    logp += -kHalfLog2Pi - ls - 0.5 * noise(i) * noise(i);
    logp -= 2.0 * (kLog2 - u - softplus(-2.0 * u));
  }
  out.log_prob = logp;
  return out;
}

Vec squash_mean(const Vec& raw) {
  if (raw.size() % 2 != 0) throw std::invalid_argument("squash_mean: odd raw size");
  Eigen::Index m = raw.size() / 2;
  return raw.head(m).array().tanh();
}

Vec squash_backward(const Vec& raw, const GaussianPolicyOutput& out,
                    const Vec& d_action, double d_log_prob,
                    const LogStdBounds& bounds) {
  Eigen::Index m = out.action.size();
  Vec d_raw = Vec::Zero(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double a = out.action(i);
    double da_du = 1.0 - a * a;
    // d log_prob / du: only the squash correction depends on u when the
    // noise is frozen; equals 2*tanh(u).
    double dlp_du = 2.0 - 4.0 * sigmoid(-2.0 * out.pre_tanh(i));
    double d_u = d_action(i) * da_du + d_log_prob * dlp_du;
    // u = mean + exp(log_std)*eps
    d_raw(i) = d_u;
    double du_dls = std::exp(out.log_std(i)) * out.noise(i);
    double d_ls = d_u * du_dls - d_log_prob;  // direct -1 term from logp
    double t = std::tanh(raw(m + i));
    d_raw(m + i) = d_ls * 0.5 * (bounds.hi - bounds.lo) * (1.0 - t * t);
  }
  return d_raw;
}

}  // namespace trdrl
