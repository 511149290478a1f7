#include "dsl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "dsl/csv.hpp"

namespace dsl {

void ExperimentConfig::validate() const {
  if (case_id < 1 || case_id > 3) throw invalid_input("config: case must be 1, 2 or 3");
  if (n_train < 1 || n_test < 1) throw invalid_input("config: sample sizes must be >= 1");
  if (d < 2) throw invalid_input("config: d must be >= 2");
  if (j < 1) throw invalid_input("config: j must be >= 1");
  if (replicates < 1) throw invalid_input("config: replicates must be >= 1");
  if (nuisance_mode == NuisanceMode::fitted && k < 2) {
    throw invalid_input("config: fitted nuisances need k >= 2");
  }
  if (!(grid_qlo > 0.0 && grid_qlo < grid_qhi && grid_qhi < 1.0)) {
    throw invalid_input("config: need 0 < grid_qlo < grid_qhi < 1");
  }
  train.validate();
}

ExperimentConfig experiment_preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "1" || name == "2" || name == "3") {
    c.case_id = name[0] - '0';
    return c;
  }
  if (name == "appendix") {
    c.case_id = 1;
    c.d = 10;
    c.n_train = 2000;
    return c;
  }
  throw invalid_input("unknown experiment preset: " + name);
}

namespace {

// replicate-local stream tags
constexpr std::uint64_t kSeedTrainData = 101;
constexpr std::uint64_t kSeedTestData = 102;
constexpr std::uint64_t kSeedFolds = 103;
constexpr std::uint64_t kSeedNet = 104;

}  // namespace

ReplicateMetrics run_replicate(const ExperimentConfig& config, int r) {
  config.validate();
  const std::uint64_t seed_r = derive_seed(config.master_seed, static_cast<std::uint64_t>(r));

  const Scenario train_scenario = make_scenario(config.case_id, config.n_train, config.d);
  const Scenario test_scenario = make_scenario(config.case_id, config.n_test, config.d);

  SimulatedDataset train = gen_scenario(train_scenario, derive_seed(seed_r, kSeedTrainData));
  SimulatedDataset test = gen_scenario(test_scenario, derive_seed(seed_r, kSeedTestData));

  const TimeGrid grid =
      build_time_grid(train.dataset, config.j, config.grid_qlo, config.grid_qhi);

  NuisanceSpec spec;
  if (config.nuisance_mode == NuisanceMode::fitted) {
    spec = FittedNuisance{config.eps_clip};
  } else {
    spec = OracleNuisance{train_scenario, config.misspec, 0.0};
  }
  const PseudoOutcomeMatrix phi = cross_fit_pseudo_outcomes(
      train.dataset, grid, config.k, derive_seed(seed_r, kSeedFolds), spec);

  MatrixXd predictions;
  double final_loss = 0.0;
  if (config.predictor_override) {
    predictions = config.predictor_override(test.dataset.x(), grid.times());
  } else {
    TrainConfig tc = config.train;
    tc.seed = derive_seed(seed_r, kSeedNet);
    const CateModel model =
        train_cate_model(train.dataset.x(), phi.values, tc, grid.times());
    predictions = model.predict_batch(test.dataset.x());
    final_loss = model.loss_trajectory.back();
  }

  MatrixXd truth(test.dataset.n(), grid.j());
  for (Eigen::Index i = 0; i < test.dataset.n(); ++i) {
    truth.row(i) =
        true_cate_grid(test_scenario, test.dataset.x_row(i).transpose(), grid.times())
            .transpose();
  }

  ReplicateMetrics m;
  m.replicate_index = r;
  const MatrixXd err = predictions - truth;
  m.bias = err.mean();
  m.mse = err.array().square().mean();
  if (!(m.mse >= 0.0) || !std::isfinite(m.bias)) {
    throw numeric_error("replicate " + std::to_string(r) + ": bad metrics");
  }
  m.final_train_loss = final_loss;
  m.nonconverged_fits = phi.nonconverged_fits;
  m.cap_breaches = train.cap_breach_count + test.cap_breach_count;
  return m;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw invalid_input("normal_quantile: p outside (0,1)");
  // Acklam's rational approximation, |relative error| < 1.2e-9
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::pair<double, double> mc_ci(const std::vector<double>& values, double level) {
  if (values.empty()) throw invalid_input("mc_ci: empty input");
  if (!(level > 0.0 && level < 1.0)) throw invalid_input("mc_ci: level outside (0,1)");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double sd = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    sd = std::sqrt(ss / (n - 1.0));
  }
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * sd / std::sqrt(n);
  return {mean - half, mean + half};
}

namespace {

int thread_budget(int replicates) {
  int budget = static_cast<int>(std::thread::hardware_concurrency());
  if (budget < 1) budget = 1;
  if (const char* env = std::getenv("DSL_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) budget = std::min(budget, cap);
    } catch (const std::exception&) {
      // unusable value: keep the hardware default
    }
  }
  return std::min(budget, replicates);
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const std::optional<std::string>& out_dir) {
  config.validate();
  const int r_total = config.replicates;
  std::vector<ReplicateMetrics> results(static_cast<std::size_t>(r_total));
  std::vector<char> done(static_cast<std::size_t>(r_total), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(r_total));

  const int workers = thread_budget(r_total);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= r_total) return;
      try {
        results[static_cast<std::size_t>(r)] = run_replicate(config, r);
        done[static_cast<std::size_t>(r)] = 1;
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(r)] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // deterministic reduction in replicate order
  std::vector<ReplicateMetrics> completed;
  std::string first_error;
  int first_error_replicate = -1;
  for (int r = 0; r < r_total; ++r) {
    if (done[static_cast<std::size_t>(r)]) {
      completed.push_back(results[static_cast<std::size_t>(r)]);
    } else if (first_error_replicate < 0) {
      first_error_replicate = r;
      first_error = errors[static_cast<std::size_t>(r)];
    }
  }

  if (first_error_replicate >= 0) {
    if (out_dir) {
      write_replicates_csv(completed, *out_dir + "/replicates.csv");
      write_run_log_json(config, completed,
                         "failed at replicate " + std::to_string(first_error_replicate) +
                             ": " + first_error,
                         *out_dir + "/run_log.json");
    }
    throw numeric_error("replicate " + std::to_string(first_error_replicate) +
                        " failed: " + first_error);
  }

  ExperimentSummary summary;
  summary.per_replicate = completed;
  std::vector<double> biases, mses;
  for (const auto& m : completed) {
    biases.push_back(m.bias);
    mses.push_back(m.mse);
  }
  const auto bci = mc_ci(biases);
  const auto mci = mc_ci(mses);
  summary.mean_bias = 0.5 * (bci.first + bci.second);
  summary.bias_ci_lo = bci.first;
  summary.bias_ci_hi = bci.second;
  summary.mean_mse = 0.5 * (mci.first + mci.second);
  summary.mse_ci_lo = mci.first;
  summary.mse_ci_hi = mci.second;

  if (out_dir) {
    write_summary_json(summary, config, *out_dir + "/summary.json");
    write_replicates_csv(summary.per_replicate, *out_dir + "/replicates.csv");
    write_run_log_json(config, summary.per_replicate, "ok", *out_dir + "/run_log.json");
  }
  return summary;
}

ApplyResult estimate_cate_real(const Dataset& data, int j, double grid_qlo,
                               double grid_qhi, int k, std::uint64_t seed,
                               const TrainConfig& train_config,
                               const std::vector<ProfileQuery>& profiles) {
  const TimeGrid grid = build_time_grid(data, j, grid_qlo, grid_qhi);
  const PseudoOutcomeMatrix phi = cross_fit_pseudo_outcomes(
      data, grid, k, derive_seed(seed, kSeedFolds), FittedNuisance{});

  TrainConfig tc = train_config;
  tc.seed = derive_seed(seed, kSeedNet);
  ApplyResult result{{},
                     train_cate_model(data.x(), phi.values, tc, grid.times()),
                     grid};

  const VectorXd col_means = data.x().colwise().mean();
  int index = 0;
  for (const auto& q : profiles) {
    if (q.varying_covariate < 0 || q.varying_covariate >= data.dim()) {
      throw invalid_input("profile '" + q.name + "': varying covariate out of range");
    }
    VectorXd base = q.fixed_profile.size() ? q.fixed_profile : col_means;
    if (base.size() != data.dim()) {
      throw invalid_input("profile '" + q.name + "': fixed profile has wrong length");
    }
    const double lo = data.x().col(q.varying_covariate).minCoeff();
    const double hi = data.x().col(q.varying_covariate).maxCoeff();
    const std::string label = q.name.empty() ? std::to_string(index) : q.name;
    for (double v : q.values) {
      if (v < lo || v > hi) {
        throw invalid_input("profile '" + label + "': probe value " +
                            format_double(v) + " outside the observed range");
      }
      VectorXd x = base;
      x[q.varying_covariate] = v;
      const VectorXd cate = result.model.predict(x);
      for (Eigen::Index t = 0; t < grid.j(); ++t) {
        result.rows.push_back(TrajectoryRow{label, v, grid.times()[t], cate[t]});
      }
    }
    ++index;
  }
  return result;
}

ApplyResult estimate_cate_real_csv(const std::string& data_csv, int j,
                                   double grid_qlo, double grid_qhi, int k,
                                   std::uint64_t seed,
                                   const TrainConfig& train_config,
                                   const std::vector<ProfileQuery>& profiles) {
  const Dataset data = read_dataset(data_csv, /*impute_missing=*/true);
  return estimate_cate_real(data, j, grid_qlo, grid_qhi, k, seed, train_config,
                            profiles);
}

}  // namespace dsl
