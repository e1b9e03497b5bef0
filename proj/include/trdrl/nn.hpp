#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace trdrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { Tanh, Relu };
enum class OutputActivation { Linear, Sigmoid };

/// Fully-connected network. Doubles end to end so finite-difference
/// checks stay meaningful. weights[k] has shape dims[k+1] x dims[k].
struct DenseNet {
  std::vector<int> dims;
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Activation hidden = Activation::Tanh;
  OutputActivation output = OutputActivation::Linear;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
  bool finite() const;
};

/// Fan-in scaled uniform init, seedable through the caller's rng.
DenseNet make_net(const std::vector<int>& dims, Activation hidden,
                  OutputActivation output, std::mt19937& rng);

/// Parameter gradients plus the gradient with respect to each input column.
struct NetGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Mat inputs;

  bool finite() const;
  void scale(double factor);
};

NetGrads zero_grads(const DenseNet& net);

Vec forward(const DenseNet& net, const Vec& input);

/// Batched forward; inputs is input_dim x batch, result output_dim x batch.
Mat forward_batch(const DenseNet& net, const Mat& inputs);

/// Exact gradients of sum_b upstream_b . output_b with respect to every
/// parameter and input. upstream is output_dim x batch.
NetGrads backward_batch(const DenseNet& net, const Mat& inputs,
                        const Mat& upstream);
NetGrads backward(const DenseNet& net, const Vec& input, const Vec& upstream);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  std::int64_t step = 0;
  AdamConfig cfg;
};

AdamState make_adam(const DenseNet& net, const AdamConfig& cfg);

/// Bias-corrected Adam update. Throws if the gradients are non-finite
/// (message carries `name`) or if parameters go non-finite afterwards.
void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state,
               const std::string& name);

/// Adam on a single scalar (used for the SAC temperature).
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  std::int64_t step = 0;
  AdamConfig cfg;
};
void adam_step_scalar(double& param, double grad, ScalarAdam& state,
                      const std::string& name);

struct LossGrads {
  double loss = 0.0;
  NetGrads grads;
};
using LossClosure = std::function<LossGrads(const DenseNet&)>;

/// Compares the closure's analytic gradients against central finite
/// differences over every parameter; returns the worst relative error.
double grad_check(const DenseNet& net, const LossClosure& closure,
                  double fd_step = 1e-5);

/// Checkpoint container: plain text header (dims, activation tags)
/// followed by row-major parameter arrays at full precision.
void save_net(const DenseNet& net, std::ostream& os);
DenseNet load_net(std::istream& is);
void save_net_file(const DenseNet& net, const std::string& path);
DenseNet load_net_file(const std::string& path);

}  // namespace trdrl
