#pragma once

#include "trdrl/nn.hpp"

namespace trdrl {

struct LogStdBounds {
  double lo = -10.0;
  double hi = 2.0;
};

/// One squashed-Gaussian head evaluation. `raw` is the actor output,
/// laid out as [mean; raw_log_std], each of length action_dim. The raw
/// log-std is mapped smoothly into [lo, hi] so gradients never die at
/// the bounds. Samples are tanh-squashed, so actions live in (-1, 1).
struct GaussianPolicyOutput {
  Vec mean;
  Vec log_std;
  Vec noise;     // standard normal draw used for the sample
  Vec pre_tanh;  // mean + std * noise
  Vec action;    // tanh(pre_tanh)
  double log_prob = 0.0;
};

GaussianPolicyOutput squash_sample(const Vec& raw, const Vec& noise,
                                   const LogStdBounds& bounds);

/// Deterministic head: tanh of the mean.
Vec squash_mean(const Vec& raw);

/// Backward pass through the sample with the noise held fixed: given
/// dL/d(action) and dL/d(log_prob), returns dL/d(raw).
Vec squash_backward(const Vec& raw, const GaussianPolicyOutput& out,
                    const Vec& d_action, double d_log_prob,
                    const LogStdBounds& bounds);

}  // namespace trdrl
