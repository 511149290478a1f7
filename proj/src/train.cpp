#include "dsl/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dsl/rng.hpp"

namespace dsl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw invalid_input("TrainConfig: learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw invalid_input("TrainConfig: betas must lie in (0,1)");
  }
  if (epochs < 1) throw invalid_input("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw invalid_input("TrainConfig: batch_size must be >= 1");
  if (hidden.empty()) throw invalid_input("TrainConfig: need at least one hidden layer");
}

OptimizerState OptimizerState::zeros_like(const MultiOutputMlp& net) {
  OptimizerState s;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    s.m_w.push_back(MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.v_w.push_back(MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.m_b.push_back(VectorXd::Zero(net.biases[l].size()));
    s.v_b.push_back(VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

void adam_step(MultiOutputMlp& net, OptimizerState& state,
               const MlpGradients& grads, const TrainConfig& config) {
  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;
  const double eps = config.adam_eps;

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    state.m_w[l] = b1 * state.m_w[l] + (1.0 - b1) * grads.weights[l];
    state.v_w[l] = b2 * state.v_w[l].array().matrix() +
                   (1.0 - b2) * grads.weights[l].array().square().matrix();
    net.weights[l].array() -=
        lr * (state.m_w[l].array() / corr1) /
        ((state.v_w[l].array() / corr2).sqrt() + eps);

    state.m_b[l] = b1 * state.m_b[l] + (1.0 - b1) * grads.biases[l];
    state.v_b[l] = b2 * state.v_b[l].array().matrix() +
                   (1.0 - b2) * grads.biases[l].array().square().matrix();
    net.biases[l].array() -= lr * (state.m_b[l].array() / corr1) /
                             ((state.v_b[l].array() / corr2).sqrt() + eps);
  }
}

Standardizer Standardizer::fit(const MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean[c]).square().sum() / std::max(1.0, n - 1.0);
    const double sd = std::sqrt(var);
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index d) {
  Standardizer s;
  s.mean = VectorXd::Zero(d);
  s.scale = VectorXd::Ones(d);
  return s;
}

VectorXd Standardizer::transform(const VecRef& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

MatrixXd Standardizer::transform_rows(const MatrixXd& x) const {
  return ((x.rowwise() - mean.transpose()).array().rowwise() /
          scale.transpose().array())
      .matrix();
}

VectorXd CateModel::predict(const VecRef& x) const {
  return mlp_forward(net, standardizer.transform(x));
}

MatrixXd CateModel::predict_batch(const MatrixXd& x) const {
  return mlp_forward_batch(net, standardizer.transform_rows(x));
}

CateModel train_cate_model(const MatrixXd& x, const MatrixXd& targets,
                           const TrainConfig& config, VectorXd grid_times) {
  config.validate();
  const Eigen::Index n = x.rows();
  if (n != targets.rows()) throw invalid_input("train: row counts disagree");
  if (n < config.batch_size) {
    throw invalid_input("train: batch_size exceeds the sample size");
  }
  if (grid_times.size() != 0 && grid_times.size() != targets.cols()) {
    throw invalid_input("train: grid length does not match target columns");
  }

  CateModel model;
  model.standardizer = Standardizer::fit(x);
  model.grid_times = std::move(grid_times);
  const MatrixXd xs = model.standardizer.transform_rows(x);

  // optimize against column-centered targets and fold the offset into the
  // output bias afterwards; the objective is unchanged but the target means
  // are represented exactly from the first step
  const VectorXd target_offset = targets.colwise().mean();
  const MatrixXd centered = targets.rowwise() - target_offset.transpose();

  std::vector<int> widths;
  widths.push_back(static_cast<int>(x.cols()));
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<int>(targets.cols()));
  model.net = init_mlp(widths, derive_seed(config.seed, 0x1111));

  OptimizerState state = OptimizerState::zeros_like(model.net);
  Rng shuffle_rng(derive_seed(config.seed, 0x2222));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  model.loss_trajectory.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - start);
      MatrixXd xb(size, xs.cols());
      MatrixXd tb(size, targets.cols());
      for (Eigen::Index r = 0; r < size; ++r) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = xs.row(i);
        tb.row(r) = centered.row(i);
      }
      adam_step(model.net, state, mlp_gradient(model.net, xb, tb), config);
    }
    const double epoch_loss = mlp_loss(model.net, xs, centered);
    if (!std::isfinite(epoch_loss)) {
      throw numeric_error("training diverged: non-finite loss after epoch " +
                          std::to_string(epoch + 1));
    }
    model.loss_trajectory.push_back(epoch_loss);
  }
  model.net.biases.back() += target_offset;

  if (config.magnitude_clamp > 0.0) {
    const double b = config.magnitude_clamp;
    for (std::size_t l = 0; l < model.net.weights.size(); ++l) {
      model.net.weights[l] = model.net.weights[l].cwiseMax(-b).cwiseMin(b);
      model.net.biases[l] = model.net.biases[l].cwiseMax(-b).cwiseMin(b);
    }
  }
  model.nonzero_parameters = model.net.nonzero_parameter_count();
  return model;
}

namespace {

nlohmann::json vec_to_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd vec_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

std::string serialize_model(const CateModel& model) {
  nlohmann::json j;
  j["format"] = "dsl-cate-model";
  j["version"] = 1;
  j["widths"] = model.net.widths();
  j["standardizer"]["mean"] = vec_to_json(model.standardizer.mean);
  j["standardizer"]["scale"] = vec_to_json(model.standardizer.scale);
  j["grid_times"] = vec_to_json(model.grid_times);
  j["nonzero_parameters"] = model.nonzero_parameters;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.net.weights.size(); ++l) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.net.weights[l].rows(); ++r) {
      const VectorXd row = model.net.weights[l].row(r).transpose();
      rows.push_back(vec_to_json(row));
    }
    weights.push_back(rows);
    biases.push_back(vec_to_json(model.net.biases[l]));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

CateModel deserialize_model(const std::string& blob) {
  nlohmann::json j = nlohmann::json::parse(blob);
  if (j.value("format", "") != "dsl-cate-model") {
    throw invalid_input("model blob: unrecognized format tag");
  }
  if (j.value("version", 0) != 1) {
    throw invalid_input("model blob: unsupported version");
  }
  CateModel model;
  model.standardizer.mean = vec_from_json(j.at("standardizer").at("mean"));
  model.standardizer.scale = vec_from_json(j.at("standardizer").at("scale"));
  model.grid_times = vec_from_json(j.at("grid_times"));
  const auto widths = j.at("widths").get<std::vector<int>>();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto rows = j.at("weights")[l];
    MatrixXd w(widths[l + 1], widths[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != w.cols()) {
        throw invalid_input("model blob: weight row length mismatch");
      }
      w.row(r) = Eigen::Map<const VectorXd>(row.data(), w.cols()).transpose();
    }
    model.net.weights.push_back(std::move(w));
    model.net.biases.push_back(vec_from_json(j.at("biases")[l]));
    if (model.net.biases.back().size() != widths[l + 1]) {
      throw invalid_input("model blob: bias length mismatch");
    }
  }
  model.nonzero_parameters = model.net.nonzero_parameter_count();
  return model;
}

void save_model(const CateModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write model file: " + path);
  out << serialize_model(model);
  if (!out) throw io_error("write failed: " + path);
}

CateModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace dsl
