#include "trdrl/shaping.hpp"

#include <cmath>
#include <stdexcept>

namespace trdrl {

LabelScheme parse_label_scheme(const std::string& tag) {
  if (tag == "linear") return LabelScheme::Linear;
  if (tag == "triangular") return LabelScheme::Triangular;
  if (tag == "geom-orig") return LabelScheme::GeometricOriginal;
  if (tag == "geom") return LabelScheme::Geometric;
  throw std::invalid_argument("unknown label scheme: " + tag);
}

std::string label_scheme_tag(LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::Linear: return "linear";
    case LabelScheme::Triangular: return "triangular";
    case LabelScheme::GeometricOriginal: return "geom-orig";
    case LabelScheme::Geometric: return "geom";
  }
  return "linear";
}

namespace {
double label_at(int t, int n, LabelScheme scheme, double gamma) {
  switch (scheme) {
    case LabelScheme::Linear:
      return static_cast<double>(t) / n;
    case LabelScheme::Triangular:
      return static_cast<double>(t) * (t + 1) / (static_cast<double>(n) * (n + 1));
    case LabelScheme::GeometricOriginal:
      return std::pow(gamma, n - t);
    case LabelScheme::Geometric:
      return (std::pow(gamma, n - t) - std::pow(gamma, n - 1)) /
             (1.0 - std::pow(gamma, n - 1));
  }
  return 0.0;
}
}  // namespace

std::vector<double> label_potentials(int n, LabelScheme scheme, double gamma) {
  if (n < 1) throw std::invalid_argument("label_potentials: degenerate trajectory (n < 1)");
  std::vector<double> labels(static_cast<std::size_t>(n) + 1);
  for (int t = 0; t <= n; ++t)
    labels[static_cast<std::size_t>(t)] = label_at(t, n, scheme, gamma);
  return labels;
}

MultiTaskMode parse_mode(const std::string& tag) {
  if (tag == "single") return MultiTaskMode::Single;
  if (tag == "task-cond") return MultiTaskMode::TaskConditioned;
  if (tag == "multi-head") return MultiTaskMode::MultiHead;
  throw std::invalid_argument("unknown multi-task mode: " + tag);
}

std::string mode_tag(MultiTaskMode mode) {
  switch (mode) {
    case MultiTaskMode::Single: return "single";
    case MultiTaskMode::TaskConditioned: return "task-cond";
    case MultiTaskMode::MultiHead: return "multi-head";
  }
  return "single";
}

PotentialBank::PotentialBank(int object_dim, int task_count, MultiTaskMode mode,
                             const std::vector<int>& hidden, double lr,
                             LabelScheme scheme, double gamma, std::mt19937& rng,
                             bool rev_labels_forward)
    : object_dim_(object_dim),
      task_count_(task_count),
      mode_(mode),
      scheme_(scheme),
      gamma_(gamma),
      rev_labels_forward_(rev_labels_forward),
      own_trained_(task_count, false),
      rev_trained_(task_count, false) {
  if (scheme == LabelScheme::Geometric && gamma >= 1.0)
    throw std::invalid_argument("geometric labels need gamma < 1");
  int in_dim = object_dim + (mode == MultiTaskMode::TaskConditioned ? task_count : 0);
  int out_dim = mode == MultiTaskMode::MultiHead ? task_count : 1;
  std::vector<int> dims = {in_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);
  int nets = mode == MultiTaskMode::Single ? task_count : 1;
  AdamConfig cfg;
  cfg.lr = lr;
  for (int i = 0; i < nets; ++i) {
    own_nets_.push_back(make_net(dims, Activation::Tanh, OutputActivation::Sigmoid, rng));
    own_opts_.push_back(make_adam(own_nets_.back(), cfg));
  }
  for (int i = 0; i < nets; ++i) {
    rev_nets_.push_back(make_net(dims, Activation::Tanh, OutputActivation::Sigmoid, rng));
    rev_opts_.push_back(make_adam(rev_nets_.back(), cfg));
  }
}

Vec PotentialBank::conditioned_input(int task, const Vec& x) const {
  if (mode_ != MultiTaskMode::TaskConditioned) return x;
  Vec in = Vec::Zero(x.size() + task_count_);
  in.head(x.size()) = x;
  in(x.size() + task) = 1.0;
  return in;
}

double PotentialBank::eval(const DenseNet& net, int task, const Vec& x) const {
  Vec out = forward(net, conditioned_input(task, x));
  return mode_ == MultiTaskMode::MultiHead ? out(task) : out(0);
}

double PotentialBank::potential_own(int task, const Vec& x) const {
  if (!own_trained_[task]) return 0.0;
  return eval(own_nets_[net_index(task)], task, x);
}

double PotentialBank::potential_rev(int task, const Vec& x) const {
  if (!rev_trained_[task]) return 0.0;
  return eval(rev_nets_[net_index(task)], task, x);
}

std::optional<double> PotentialBank::fit_step(DenseNet& net, AdamState& opt, int task,
                                              const SuccessDataset& data,
                                              bool reversed_labels, std::size_t batch,
                                              std::mt19937& rng, const std::string& name) {
  if (data.empty() || batch == 0) return std::nullopt;
  Eigen::Index in_dim = net.input_dim();
  Mat inputs(in_dim, static_cast<Eigen::Index>(batch));
  Mat targets(net.output_dim(), static_cast<Eigen::Index>(batch));
  Mat mask = Mat::Zero(net.output_dim(), static_cast<Eigen::Index>(batch));
  std::uniform_int_distribution<std::size_t> pick_traj(0, data.size() - 1);
  std::size_t used = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& xs = data.object_states(pick_traj(rng));
    int n = static_cast<int>(xs.size()) - 1;
    std::uniform_int_distribution<int> pick_t(0, n);
    int t = pick_t(rng);
    double y = label_at(reversed_labels ? n - t : t, n, scheme_, gamma_);
    if (!std::isfinite(y)) continue;  // geometric n=1 degeneracy
    Eigen::Index col = static_cast<Eigen::Index>(used);
    inputs.col(col) = conditioned_input(task, xs[static_cast<std::size_t>(t)]);
    int row = mode_ == MultiTaskMode::MultiHead ? task : 0;
    targets(row, col) = y;
    mask(row, col) = 1.0;
    ++used;
  }
  if (used == 0) return std::nullopt;
  Mat in_used = inputs.leftCols(static_cast<Eigen::Index>(used));
  Mat tgt_used = targets.leftCols(static_cast<Eigen::Index>(used));
  Mat mask_used = mask.leftCols(static_cast<Eigen::Index>(used));
  Mat pred = forward_batch(net, in_used);
  Mat res = (pred - tgt_used).array() * mask_used.array();
  double loss = res.squaredNorm() / static_cast<double>(used);
  NetGrads g = backward_batch(net, in_used, Mat(2.0 * res / static_cast<double>(used)));
  adam_step(net, g, opt, name);
  return loss;
}

std::pair<std::optional<double>, std::optional<double>> PotentialBank::train_step(
    int task, const SuccessDataset& own, const SuccessDataset& rev, std::size_t batch,
    std::mt19937& rng) {
  int idx = net_index(task);
  auto loss_own = fit_step(own_nets_[idx], own_opts_[idx], task, own,
                           /*reversed_labels=*/false, batch, rng, "potential-own");
  if (loss_own) own_trained_[task] = true;
  auto loss_rev = fit_step(rev_nets_[idx], rev_opts_[idx], task, rev,
                           /*reversed_labels=*/!rev_labels_forward_, batch, rng,
                           "potential-rev");
  if (loss_rev) rev_trained_[task] = true;
  return {loss_own, loss_rev};
}

double PotentialBank::shaping_delta(int task, const Vec& x, const Vec& x_next,
                                    double gamma) const {
  double term_own =
      own_trained_[task]
          ? gamma * potential_own(task, x_next) - potential_own(task, x)
          : 0.0;
  double term_rev =
      rev_trained_[task]
          ? gamma * potential_rev(task, x_next) - potential_rev(task, x)
          : 0.0;
  return 0.5 * (term_own + term_rev);
}

double PotentialBank::shape_reward(int task, const Vec& x, const Vec& x_next, double r,
                                   double gamma) const {
  return r + shaping_delta(task, x, x_next, gamma);
}

void PotentialBank::mark_trained(int task, bool own, bool rev) {
  own_trained_[task] = own;
  rev_trained_[task] = rev;
}

}  // namespace trdrl
