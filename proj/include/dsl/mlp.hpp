#pragma once

#include <cstdint>
#include <vector>

#include "dsl/common.hpp"

namespace dsl {

/// Fully connected feedforward network with rectifier hidden layers and an
/// affine output layer. weights[l] maps layer l to layer l+1, so a network
/// with widths (p0, p1, ..., pL, J) stores L+1 weight matrices.
struct MultiOutputMlp {
  std::vector<MatrixXd> weights;  // weights[l]: p_{l+1} x p_l
  std::vector<VectorXd> biases;

  Eigen::Index input_dim() const { return weights.front().cols(); }
  Eigen::Index output_dim() const { return weights.back().rows(); }
  std::vector<int> widths() const;
  Eigen::Index parameter_count() const;
  Eigen::Index nonzero_parameter_count(double threshold = 1e-8) const;
};

/// Fan-in-scaled uniform initialization with bound sqrt(1 / fan_in); biases 0.
MultiOutputMlp init_mlp(const std::vector<int>& widths, std::uint64_t seed);

VectorXd mlp_forward(const MultiOutputMlp& net, const VecRef& x);

/// Rows of x are samples; returns one row of outputs per sample.
MatrixXd mlp_forward_batch(const MultiOutputMlp& net, const MatrixXd& x);

/// Empirical squared loss averaged over samples and outputs:
/// (1 / (N J)) sum_i || targets_i - f(x_i) ||^2.
double mlp_loss(const MultiOutputMlp& net, const MatrixXd& x,
                const MatrixXd& targets);

struct MlpGradients {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;
};

/// Exact reverse-mode gradient of the batch loss. The rectifier subgradient
/// at 0 is taken as 0.
MlpGradients mlp_gradient(const MultiOutputMlp& net, const MatrixXd& x,
                          const MatrixXd& targets);

}  // namespace dsl
