#include "trdrl/nn.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace trdrl {

namespace {

Mat apply_hidden(const Mat& pre, Activation act) {
  if (act == Activation::Tanh) return pre.array().tanh();
  return pre.array().max(0.0);
}

Mat hidden_derivative(const Mat& activated, const Mat& pre, Activation act) {
  if (act == Activation::Tanh) return 1.0 - activated.array().square();
  return (pre.array() > 0.0).cast<double>();
}

Mat apply_output(const Mat& pre, OutputActivation act) {
  if (act == OutputActivation::Linear) return pre;
  return 1.0 / (1.0 + (-pre.array()).exp());
}

Mat output_derivative(const Mat& activated, OutputActivation act) {
  if (act == OutputActivation::Linear) return Mat::Ones(activated.rows(), activated.cols());
  return activated.array() * (1.0 - activated.array());
}

struct Trace {
  std::vector<Mat> post;  // post[0] = inputs, post[k+1] = layer k output
  std::vector<Mat> pre;   // pre-activation per layer
};

Trace run_forward(const DenseNet& net, const Mat& inputs) {
  if (inputs.rows() != net.input_dim())
    throw std::invalid_argument("forward: input dim " + std::to_string(inputs.rows()) +
                                " != net input dim " + std::to_string(net.input_dim()));
  Trace tr;
  tr.post.reserve(net.layer_count() + 1);
  tr.pre.reserve(net.layer_count());
  tr.post.push_back(inputs);
  for (int k = 0; k < net.layer_count(); ++k) {
    Mat pre = (net.weights[k] * tr.post.back()).colwise() + net.biases[k];
    bool last = (k == net.layer_count() - 1);
    tr.post.push_back(last ? apply_output(pre, net.output) : apply_hidden(pre, net.hidden));
    tr.pre.push_back(std::move(pre));
  }
  return tr;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

bool DenseNet::finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

DenseNet make_net(const std::vector<int>& dims, Activation hidden,
                  OutputActivation output, std::mt19937& rng) {
  if (dims.empty()) throw std::invalid_argument("make_net: empty dims");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("make_net: non-positive layer dim");
  DenseNet net;
  net.dims = dims;
  net.hidden = hidden;
  net.output = output;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    double bound = 1.0 / std::sqrt(static_cast<double>(dims[k]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat w(dims[k + 1], dims[k]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    Vec b(dims[k + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

bool NetGrads::finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

void NetGrads::scale(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : biases) b *= factor;
  if (inputs.size() > 0) inputs *= factor;
}

NetGrads zero_grads(const DenseNet& net) {
  NetGrads g;
  for (int k = 0; k < net.layer_count(); ++k) {
    g.weights.emplace_back(Mat::Zero(net.weights[k].rows(), net.weights[k].cols()));
    g.biases.emplace_back(Vec::Zero(net.biases[k].size()));
  }
  g.inputs = Mat::Zero(net.input_dim(), 0);
  return g;
}

Mat forward_batch(const DenseNet& net, const Mat& inputs) {
  if (net.layer_count() == 0) return inputs;
  return run_forward(net, inputs).post.back();
}

Vec forward(const DenseNet& net, const Vec& input) {
  return forward_batch(net, input).col(0);
}

NetGrads backward_batch(const DenseNet& net, const Mat& inputs, const Mat& upstream) {
  if (upstream.rows() != net.output_dim())
    throw std::invalid_argument("backward: upstream dim " + std::to_string(upstream.rows()) +
                                " != net output dim " + std::to_string(net.output_dim()));
  if (upstream.cols() != inputs.cols())
    throw std::invalid_argument("backward: batch size mismatch");
  NetGrads g;
  if (net.layer_count() == 0) {
    g.inputs = upstream;
    return g;
  }
  Trace tr = run_forward(net, inputs);
  g.weights.resize(net.layer_count());
  g.biases.resize(net.layer_count());

  int last = net.layer_count() - 1;
  Mat delta = upstream.array() * output_derivative(tr.post[last + 1], net.output).array();
  for (int k = last; k >= 0; --k) {
    g.weights[k] = delta * tr.post[k].transpose();
    g.biases[k] = delta.rowwise().sum();
    Mat back = net.weights[k].transpose() * delta;
    if (k > 0)
      delta = back.array() * hidden_derivative(tr.post[k], tr.pre[k - 1], net.hidden).array();
    else
      g.inputs = std::move(back);
  }
  return g;
}

NetGrads backward(const DenseNet& net, const Vec& input, const Vec& upstream) {
  return backward_batch(net, input, upstream);
}

AdamState make_adam(const DenseNet& net, const AdamConfig& cfg) {
  AdamState st;
  st.cfg = cfg;
  for (int k = 0; k < net.layer_count(); ++k) {
    st.m_w.emplace_back(Mat::Zero(net.weights[k].rows(), net.weights[k].cols()));
    st.v_w.emplace_back(Mat::Zero(net.weights[k].rows(), net.weights[k].cols()));
    st.m_b.emplace_back(Vec::Zero(net.biases[k].size()));
    st.v_b.emplace_back(Vec::Zero(net.biases[k].size()));
  }
  return st;
}

void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state,
               const std::string& name) {
  if (!grads.finite())
    throw std::runtime_error("adam_step: non-finite gradient for model '" + name + "'");
  const auto& cfg = state.cfg;
  state.step += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int k = 0; k < net.layer_count(); ++k) {
    state.m_w[k] = cfg.beta1 * state.m_w[k] + (1.0 - cfg.beta1) * grads.weights[k];
    state.v_w[k] = cfg.beta2 * state.v_w[k].array() +
                   (1.0 - cfg.beta2) * grads.weights[k].array().square();
    net.weights[k].array() -=
        cfg.lr * (state.m_w[k].array() / c1) / ((state.v_w[k].array() / c2).sqrt() + cfg.eps);
    state.m_b[k] = cfg.beta1 * state.m_b[k] + (1.0 - cfg.beta1) * grads.biases[k];
    state.v_b[k] = cfg.beta2 * state.v_b[k].array() +
                   (1.0 - cfg.beta2) * grads.biases[k].array().square();
    net.biases[k].array() -=
        cfg.lr * (state.m_b[k].array() / c1) / ((state.v_b[k].array() / c2).sqrt() + cfg.eps);
  }
  if (!net.finite())
    throw std::runtime_error("adam_step: non-finite parameters in model '" + name +
                             "' after update " + std::to_string(state.step));
}

void adam_step_scalar(double& param, double grad, ScalarAdam& state,
                      const std::string& name) {
  if (!std::isfinite(grad))
    throw std::runtime_error("adam_step: non-finite gradient for model '" + name + "'");
  const auto& cfg = state.cfg;
  state.step += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad;
  double mhat = state.m / (1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  double vhat = state.v / (1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
  param -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  if (!std::isfinite(param))
    throw std::runtime_error("adam_step: non-finite parameter in model '" + name + "'");
}

double grad_check(const DenseNet& net, const LossClosure& closure, double fd_step) {
  LossGrads analytic = closure(net);
  DenseNet probe = net;
  double worst = 0.0;
  auto compare = [&](double a, double* slot) {
    double saved = *slot;
    *slot = saved + fd_step;
    double up = closure(probe).loss;
    *slot = saved - fd_step;
    double down = closure(probe).loss;
    *slot = saved;
    double fd = (up - down) / (2.0 * fd_step);
    double rel = std::abs(a - fd) / std::max(1e-6, std::abs(a) + std::abs(fd));
    if (rel > worst) worst = rel;
  };
  for (int k = 0; k < net.layer_count(); ++k) {
    for (Eigen::Index i = 0; i < probe.weights[k].rows(); ++i)
      for (Eigen::Index j = 0; j < probe.weights[k].cols(); ++j)
        compare(analytic.grads.weights[k](i, j), &probe.weights[k](i, j));
    for (Eigen::Index i = 0; i < probe.biases[k].size(); ++i)
      compare(analytic.grads.biases[k](i), &probe.biases[k](i));
  }
  return worst;
}

namespace {
const char* activation_tag(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }
const char* output_tag(OutputActivation a) {
  return a == OutputActivation::Linear ? "linear" : "sigmoid";
}
}  // namespace

void save_net(const DenseNet& net, std::ostream& os) {
  os << "densenet 1\n";
  os << "dims";
  for (int d : net.dims) os << ' ' << d;
  os << '\n';
  os << "hidden " << activation_tag(net.hidden) << '\n';
  os << "output " << output_tag(net.output) << '\n';
  os << std::setprecision(17);
  for (int k = 0; k < net.layer_count(); ++k) {
    os << "W" << k;
    for (Eigen::Index i = 0; i < net.weights[k].rows(); ++i)
      for (Eigen::Index j = 0; j < net.weights[k].cols(); ++j) os << ' ' << net.weights[k](i, j);
    os << '\n';
    os << "b" << k;
    for (Eigen::Index i = 0; i < net.biases[k].size(); ++i) os << ' ' << net.biases[k](i);
    os << '\n';
  }
}

DenseNet load_net(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "densenet" || version != 1)
    throw std::runtime_error("load_net: bad header");
  DenseNet net;
  is >> tag;
  if (tag != "dims") throw std::runtime_error("load_net: expected dims");
  {
    std::string rest;
    std::getline(is, rest);
    std::istringstream ds(rest);
    int d;
    while (ds >> d) net.dims.push_back(d);
  }
  if (net.dims.empty()) throw std::runtime_error("load_net: empty dims");
  std::string val;
  is >> tag >> val;
  net.hidden = (val == "relu") ? Activation::Relu : Activation::Tanh;
  is >> tag >> val;
  net.output = (val == "sigmoid") ? OutputActivation::Sigmoid : OutputActivation::Linear;
  for (std::size_t k = 0; k + 1 < net.dims.size(); ++k) {
    is >> tag;  // Wk
    Mat w(net.dims[k + 1], net.dims[k]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) is >> w(i, j);
    is >> tag;  // bk
    Vec b(net.dims[k + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) is >> b(i);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  if (!is) throw std::runtime_error("load_net: truncated stream");
  return net;
}

void save_net_file(const DenseNet& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_net: cannot open " + path);
  save_net(net, os);
}

DenseNet load_net_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_net: cannot open " + path);
  return load_net(is);
}

}  // namespace trdrl
