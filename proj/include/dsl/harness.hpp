#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/data_model.hpp"
#include "dsl/pseudo_outcome.hpp"
#include "dsl/simulator.hpp"
#include "dsl/train.hpp"

namespace dsl {

enum class NuisanceMode { fitted, oracle };

struct ExperimentConfig {
  int case_id = 1;  // 1, 2 or 3; the appendix preset is case 1 at d=10
  Eigen::Index n_train = 800;
  Eigen::Index n_test = 400;
  int d = 30;
  int j = 1;
  int k = 5;
  int replicates = 1;
  std::uint64_t master_seed = 0;
  NuisanceMode nuisance_mode = NuisanceMode::fitted;
  Misspec misspec = Misspec::none;  // oracle mode only
  double eps_clip = kDefaultEpsClip;
  double grid_qlo = 0.2;
  double grid_qhi = 0.8;
  TrainConfig train;

  /// Test hook: replaces the trained network's test-set predictions.
  /// Receives (x_test, grid times); not serialized.
  std::function<MatrixXd(const MatrixXd&, const VectorXd&)> predictor_override;

  void validate() const;
};

/// Named presets: "1", "2", "3" at the paper scale, "appendix" for the
/// simplified setting (case 1, d=10, n_train=2000).
ExperimentConfig experiment_preset(const std::string& name);

struct ReplicateMetrics {
  int replicate_index = 0;
  double bias = 0.0;
  double mse = 0.0;
  double final_train_loss = 0.0;
  int nonconverged_fits = 0;
  int cap_breaches = 0;
};

struct ExperimentSummary {
  double mean_bias = 0.0;
  double bias_ci_lo = 0.0, bias_ci_hi = 0.0;
  double mean_mse = 0.0;
  double mse_ci_lo = 0.0, mse_ci_hi = 0.0;
  std::vector<ReplicateMetrics> per_replicate;
};

/// Runs one seeded replicate: generate train/test data, build the grid from
/// the training sample, cross-fit pseudo-outcomes, train the network, and
/// score bias and MSE on the test sample against the true CATE.
/// Replicate seeds derive as master_seed ^ mix64(r).
ReplicateMetrics run_replicate(const ExperimentConfig& config, int r);

/// All replicates (in parallel, reduced in replicate order) plus Monte
/// Carlo confidence intervals. With out_dir set, writes summary.json,
/// replicates.csv and run_log.json; on a replicate failure the completed
/// rows are saved before the error propagates.
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const std::optional<std::string>& out_dir = std::nullopt);

/// mean +- z * sd / sqrt(R); a single value yields a degenerate interval.
std::pair<double, double> mc_ci(const std::vector<double>& values,
                                double level = 0.95);

double normal_quantile(double p);

/// CATE trajectory request: vary one covariate over probe values, the rest
/// fixed (empty fixed_profile means sample means).
struct ProfileQuery {
  std::string name;
  int varying_covariate = 0;  // 0-based column
  std::vector<double> values;
  VectorXd fixed_profile;
};

struct TrajectoryRow {
  std::string profile;
  double covariate_value = 0.0;
  double t = 0.0;
  double cate = 0.0;
};

struct ApplyResult {
  std::vector<TrajectoryRow> rows;
  CateModel model;
  TimeGrid grid;
};

/// Full pipeline on observational data (no test split): grid from the data,
/// cross-fitted Cox/logistic nuisances, network fit, then CATE trajectories
/// for each covariate profile.
ApplyResult estimate_cate_real(const Dataset& data, int j, double grid_qlo,
                               double grid_qhi, int k, std::uint64_t seed,
                               const TrainConfig& train_config,
                               const std::vector<ProfileQuery>& profiles);

/// CSV entry point: reads the dataset, mean-imputes missing covariate
/// cells, and delegates.
ApplyResult estimate_cate_real_csv(const std::string& data_csv, int j,
                                   double grid_qlo, double grid_qhi, int k,
                                   std::uint64_t seed,
                                   const TrainConfig& train_config,
                                   const std::vector<ProfileQuery>& profiles);

// --- serialization (export.cpp) ---

std::string summary_to_json(const ExperimentSummary& summary,
                            const ExperimentConfig& config);
ExperimentSummary summary_from_json(const std::string& text);

void write_summary_json(const ExperimentSummary& summary,
                        const ExperimentConfig& config, const std::string& path);
void write_replicates_csv(const std::vector<ReplicateMetrics>& rows,
                          const std::string& path);
void write_run_log_json(const ExperimentConfig& config,
                        const std::vector<ReplicateMetrics>& rows,
                        const std::string& status, const std::string& path);
void write_trajectories_csv(const std::vector<TrajectoryRow>& rows,
                            const std::string& path);
void write_phi_csv(const PseudoOutcomeMatrix& phi, const std::string& path);

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);
std::vector<ProfileQuery> profiles_from_json(const std::string& text);

}  // namespace dsl
