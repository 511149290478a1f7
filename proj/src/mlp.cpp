#include "dsl/mlp.hpp"

#include <cmath>

#include "dsl/rng.hpp"

namespace dsl {

std::vector<int> MultiOutputMlp::widths() const {
  std::vector<int> w;
  w.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
  return w;
}

Eigen::Index MultiOutputMlp::parameter_count() const {
  Eigen::Index count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += weights[l].size() + biases[l].size();
  }
  return count;
}

Eigen::Index MultiOutputMlp::nonzero_parameter_count(double threshold) const {
  Eigen::Index count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += (weights[l].array().abs() > threshold).count();
    count += (biases[l].array().abs() > threshold).count();
  }
  return count;
}

MultiOutputMlp init_mlp(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 3) {
    throw invalid_input("init_mlp: need at least one hidden layer");
  }
  for (int w : widths) {
    if (w < 1) throw invalid_input("init_mlp: layer widths must be positive");
  }
  Rng rng(seed);
  MultiOutputMlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    // fan-in-scaled uniform init at the framework-default scale: the
    // untrained network stays near zero, which the noise level of the
    // pseudo-outcome regression requires
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(VectorXd::Zero(fan_out));
  }
  return net;
}

VectorXd mlp_forward(const MultiOutputMlp& net, const VecRef& x) {
  if (x.size() != net.input_dim()) {
    throw invalid_input("mlp_forward: input dimension mismatch");
  }
  VectorXd a = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    a = ((net.weights[l] * a + net.biases[l]).array().max(0.0)).matrix();
  }
  return net.weights[last] * a + net.biases[last];
}

MatrixXd mlp_forward_batch(const MultiOutputMlp& net, const MatrixXd& x) {
  if (x.cols() != net.input_dim()) {
    throw invalid_input("mlp_forward_batch: input dimension mismatch");
  }
  MatrixXd a = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    a = ((a * net.weights[l].transpose()).rowwise() +
         net.biases[l].transpose())
            .array()
            .max(0.0)
            .matrix();
  }
  return (a * net.weights[last].transpose()).rowwise() +
         net.biases[last].transpose();
}

double mlp_loss(const MultiOutputMlp& net, const MatrixXd& x,
                const MatrixXd& targets) {
  if (x.rows() != targets.rows() || targets.cols() != net.output_dim()) {
    throw invalid_input("mlp_loss: shape mismatch");
  }
  const MatrixXd residual = mlp_forward_batch(net, x) - targets;
  return residual.squaredNorm() /
         static_cast<double>(residual.rows() * residual.cols());
}

MlpGradients mlp_gradient(const MultiOutputMlp& net, const MatrixXd& x,
                          const MatrixXd& targets) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw invalid_input("mlp_gradient: empty batch");
  if (x.cols() != net.input_dim() || targets.rows() != n ||
      targets.cols() != net.output_dim()) {
    throw invalid_input("mlp_gradient: shape mismatch");
  }
  const std::size_t layers = net.weights.size();

  // forward pass keeping activations
  std::vector<MatrixXd> acts(layers);  // acts[l] = input to layer l
  std::vector<MatrixXd> preacts(layers - 1);
  MatrixXd a = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    acts[l] = a;
    preacts[l] = (a * net.weights[l].transpose()).rowwise() +
                 net.biases[l].transpose();
    a = preacts[l].array().max(0.0).matrix();
  }
  acts[layers - 1] = a;
  const MatrixXd out = (a * net.weights[layers - 1].transpose()).rowwise() +
                       net.biases[layers - 1].transpose();

  MlpGradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  const double scale =
      2.0 / static_cast<double>(n * net.output_dim());
  MatrixXd delta = scale * (out - targets);  // n x p_{l+1}
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = delta.transpose() * acts[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * net.weights[l]).array() *
              (preacts[l - 1].array() > 0.0).cast<double>();
    }
  }
  return grads;
}

}  // namespace dsl
