#pragma once

#include "trdrl/nn.hpp"
#include "trdrl/replay.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace trdrl {

enum class LabelScheme { Linear, Triangular, GeometricOriginal, Geometric };

LabelScheme parse_label_scheme(const std::string& tag);
std::string label_scheme_tag(LabelScheme scheme);

/// Potential targets along a successful trajectory of length n,
/// evaluated at t = 0..n:
///   linear      t/n
///   triangular  t(t+1)/(n(n+1))
///   geom-orig   gamma^(n-t)
///   geom        (gamma^(n-t) - gamma^(n-1)) / (1 - gamma^(n-1))
/// Throws for n < 1. The geometric variant is degenerate at n = 1
/// (division by zero, IEEE semantics apply).
std::vector<double> label_potentials(int n, LabelScheme scheme, double gamma);

enum class MultiTaskMode { Single, TaskConditioned, MultiHead };
MultiTaskMode parse_mode(const std::string& tag);
std::string mode_tag(MultiTaskMode mode);

/// Per-task pair of potential models over the object state x:
/// phi_own fits the task's own successes with forward labels, phi_rev
/// fits the paired task's successes with time-reversed labels. Until a
/// model has seen data it contributes zero shaping instead of noise.
class PotentialBank {
 public:
  PotentialBank(int object_dim, int task_count, MultiTaskMode mode,
                const std::vector<int>& hidden, double lr, LabelScheme scheme,
                double gamma, std::mt19937& rng, bool rev_labels_forward = false);

  double potential_own(int task, const Vec& x) const;
  double potential_rev(int task, const Vec& x) const;

  /// One Adam step per model from the corresponding dataset (skipped
  /// while a dataset is empty).
  std::pair<std::optional<double>, std::optional<double>> train_step(
      int task, const SuccessDataset& own, const SuccessDataset& rev,
      std::size_t batch, std::mt19937& rng);

  /// r + mean over {phi_own, phi_rev} of (gamma*phi(x') - phi(x)).
  double shape_reward(int task, const Vec& x, const Vec& x_next, double r,
                      double gamma) const;
  double shaping_delta(int task, const Vec& x, const Vec& x_next, double gamma) const;

  LabelScheme scheme() const { return scheme_; }
  bool own_trained(int task) const { return own_trained_[task]; }
  bool rev_trained(int task) const { return rev_trained_[task]; }

  /// Test/checkpoint hook: treat models as trained so they contribute.
  void mark_trained(int task, bool own, bool rev);

  DenseNet& own_net(int task) { return own_nets_[net_index(task)]; }
  DenseNet& rev_net(int task) { return rev_nets_[net_index(task)]; }

 private:
  int net_index(int task) const { return mode_ == MultiTaskMode::Single ? task : 0; }
  Vec conditioned_input(int task, const Vec& x) const;
  double eval(const DenseNet& net, int task, const Vec& x) const;
  std::optional<double> fit_step(DenseNet& net, AdamState& opt, int task,
                                 const SuccessDataset& data, bool reversed_labels,
                                 std::size_t batch, std::mt19937& rng,
                                 const std::string& name);

  int object_dim_;
  int task_count_;
  MultiTaskMode mode_;
  LabelScheme scheme_;
  double gamma_;
  bool rev_labels_forward_;
  std::vector<DenseNet> own_nets_, rev_nets_;
  std::vector<AdamState> own_opts_, rev_opts_;
  std::vector<bool> own_trained_, rev_trained_;
};

}  // namespace trdrl
