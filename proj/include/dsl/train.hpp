#pragma once

#include <string>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/mlp.hpp"

namespace dsl {

struct TrainConfig {
  double learning_rate = 0.003;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {128, 64, 32};
  double magnitude_clamp = 0.0;  // post-training |param| bound; 0 disables

  void validate() const;
};

/// Adam moment accumulators, shaped like the network parameters.
struct OptimizerState {
  std::vector<MatrixXd> m_w, v_w;
  std::vector<VectorXd> m_b, v_b;
  long step = 0;

  static OptimizerState zeros_like(const MultiOutputMlp& net);
};

/// One bias-corrected Adam update in place.
void adam_step(MultiOutputMlp& net, OptimizerState& state,
               const MlpGradients& grads, const TrainConfig& config);

/// Per-coordinate affine transform fitted on the training inputs and stored
/// with the model.
struct Standardizer {
  VectorXd mean;
  VectorXd scale;

  static Standardizer fit(const MatrixXd& x);
  static Standardizer identity(Eigen::Index d);

  VectorXd transform(const VecRef& x) const;
  MatrixXd transform_rows(const MatrixXd& x) const;
};

/// A trained CATE model: standardizer + network + training diagnostics.
struct CateModel {
  Standardizer standardizer;
  MultiOutputMlp net;
  VectorXd grid_times;                 // evaluation times (may be empty)
  std::vector<double> loss_trajectory;  // full-sample loss after each epoch
  Eigen::Index nonzero_parameters = 0;  // sparsity statistic, |param| > 1e-8

  VectorXd predict(const VecRef& x) const;
  MatrixXd predict_batch(const MatrixXd& x) const;
};

/// Mini-batch Adam on the empirical squared loss with per-epoch seeded
/// shuffling. Deterministic for a fixed (data, config). Throws on a
/// non-finite loss.
CateModel train_cate_model(const MatrixXd& x, const MatrixXd& targets,
                           const TrainConfig& config,
                           VectorXd grid_times = VectorXd());

// version-tagged JSON blob with architecture, standardizer and parameters
std::string serialize_model(const CateModel& model);
CateModel deserialize_model(const std::string& blob);
void save_model(const CateModel& model, const std::string& path);
CateModel load_model(const std::string& path);

}  // namespace dsl
