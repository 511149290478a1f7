#include "dsl.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dsl/csv.hpp"
#include "dsl/harness.hpp"

namespace {

thread_local std::string g_last_error;

dsl_status fail(dsl_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
dsl_status guarded(Fn&& fn) {
  try {
    fn();
    return DSL_OK;
  } catch (const dsl::invalid_input& e) {
    return fail(DSL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const dsl::io_error& e) {
    return fail(DSL_ERR_IO, e.what());
  } catch (const dsl::numeric_error& e) {
    return fail(DSL_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(DSL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DSL_ERR_INTERNAL, "unknown error");
  }
}

dsl_status require(bool ok, const char* what) {
  return ok ? DSL_OK : fail(DSL_ERR_INVALID_ARGUMENT, what);
}

}  // namespace

struct dsl_dataset {
  dsl::Dataset data;
};
struct dsl_grid {
  dsl::TimeGrid grid;
};
struct dsl_phi {
  dsl::PseudoOutcomeMatrix phi;
};
struct dsl_model {
  dsl::CateModel model;
};

extern "C" {

const char* dsl_version(void) { return "1.0.0"; }

const char* dsl_last_error(void) { return g_last_error.c_str(); }

dsl_status dsl_dataset_read_csv(const char* path, int impute_missing,
                                dsl_dataset** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] {
    *out = new dsl_dataset{dsl::read_dataset(path, impute_missing != 0)};
  });
}

dsl_status dsl_dataset_write_csv(const dsl_dataset* ds, const char* path) {
  if (auto s = require(ds && path, "null argument")) return s;
  return guarded([&] { dsl::write_dataset_csv(ds->data, path); });
}

dsl_status dsl_simulate(int case_id, long long n, int d, uint64_t seed,
                        dsl_dataset** out) {
  if (auto s = require(out != nullptr, "null argument")) return s;
  return guarded([&] {
    auto sim = dsl::gen_scenario(dsl::make_scenario(case_id, n, d), seed);
    *out = new dsl_dataset{std::move(sim.dataset)};
  });
}

long long dsl_dataset_size(const dsl_dataset* ds) {
  return ds ? static_cast<long long>(ds->data.n()) : -1;
}

int dsl_dataset_dim(const dsl_dataset* ds) {
  return ds ? static_cast<int>(ds->data.dim()) : -1;
}

void dsl_dataset_free(dsl_dataset* ds) { delete ds; }

dsl_status dsl_grid_build(const dsl_dataset* ds, int j, double q_lo, double q_hi,
                          dsl_grid** out) {
  if (auto s = require(ds && out, "null argument")) return s;
  return guarded([&] {
    *out = new dsl_grid{dsl::build_time_grid(ds->data, j, q_lo, q_hi)};
  });
}

int dsl_grid_size(const dsl_grid* grid) {
  return grid ? static_cast<int>(grid->grid.j()) : -1;
}

dsl_status dsl_grid_times(const dsl_grid* grid, double* out_times) {
  if (auto s = require(grid && out_times, "null argument")) return s;
  for (Eigen::Index i = 0; i < grid->grid.j(); ++i) {
    out_times[i] = grid->grid.times()[i];
  }
  return DSL_OK;
}

void dsl_grid_free(dsl_grid* grid) { delete grid; }

dsl_status dsl_kaplan_meier(const dsl_dataset* ds, int arm, const double* times,
                            int n_times, double* out_survival) {
  if (auto s = require(ds && times && out_survival && n_times >= 0,
                       "null argument")) {
    return s;
  }
  if (auto s = require(arm >= -1 && arm <= 1, "arm must be -1, 0 or 1")) return s;
  return guarded([&] {
    std::optional<int> which;
    if (arm >= 0) which = arm;
    const dsl::StepFunction km = dsl::kaplan_meier(ds->data, which);
    for (int i = 0; i < n_times; ++i) out_survival[i] = km(times[i]);
  });
}

dsl_status dsl_cross_fit(const dsl_dataset* ds, const dsl_grid* grid, int k,
                         uint64_t seed, dsl_phi** out) {
  if (auto s = require(ds && grid && out, "null argument")) return s;
  return guarded([&] {
    *out = new dsl_phi{dsl::cross_fit_pseudo_outcomes(
        ds->data, grid->grid, k, seed, dsl::FittedNuisance{})};
  });
}

long long dsl_phi_rows(const dsl_phi* phi) {
  return phi ? static_cast<long long>(phi->phi.values.rows()) : -1;
}

int dsl_phi_cols(const dsl_phi* phi) {
  return phi ? static_cast<int>(phi->phi.values.cols()) : -1;
}

dsl_status dsl_phi_values(const dsl_phi* phi, double* out) {
  if (auto s = require(phi && out, "null argument")) return s;
  const auto& m = phi->phi.values;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[i * m.cols() + j] = m(i, j);
    }
  }
  return DSL_OK;
}

dsl_status dsl_phi_write_csv(const dsl_phi* phi, const char* path) {
  if (auto s = require(phi && path, "null argument")) return s;
  return guarded([&] { dsl::write_phi_csv(phi->phi, path); });
}

void dsl_phi_free(dsl_phi* phi) { delete phi; }

dsl_status dsl_train(const dsl_dataset* ds, const dsl_phi* phi,
                     const char* train_config_json, dsl_model** out) {
  if (auto s = require(ds && phi && out, "null argument")) return s;
  return guarded([&] {
    dsl::TrainConfig tc;
    if (train_config_json && std::strlen(train_config_json) > 0) {
      tc = dsl::train_config_from_json(train_config_json);
    }
    *out = new dsl_model{dsl::train_cate_model(
        ds->data.x(), phi->phi.values, tc, phi->phi.grid.times())};
  });
}

int dsl_model_outputs(const dsl_model* model) {
  return model ? static_cast<int>(model->model.net.output_dim()) : -1;
}

dsl_status dsl_model_predict(const dsl_model* model, const double* x, int d,
                             double* out, int j) {
  if (auto s = require(model && x && out, "null argument")) return s;
  return guarded([&] {
    if (d != model->model.net.input_dim()) {
      throw dsl::invalid_input("predict: covariate dimension mismatch");
    }
    if (j != model->model.net.output_dim()) {
      throw dsl::invalid_input("predict: output length mismatch");
    }
    const Eigen::Map<const dsl::VectorXd> xin(x, d);
    const dsl::VectorXd y = model->model.predict(xin);
    for (int i = 0; i < j; ++i) out[i] = y[i];
  });
}

dsl_status dsl_model_save(const dsl_model* model, const char* path) {
  if (auto s = require(model && path, "null argument")) return s;
  return guarded([&] { dsl::save_model(model->model, path); });
}

dsl_status dsl_model_load(const char* path, dsl_model** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new dsl_model{dsl::load_model(path)}; });
}

void dsl_model_free(dsl_model* model) { delete model; }

dsl_status dsl_cmd_sim(const char* config_json) {
  if (auto s = require(config_json != nullptr, "null config")) return s;
  return guarded([&] {
    const auto cfg = nlohmann::json::parse(config_json);
    const int case_id = cfg.at("case").get<int>();
    const long long n = cfg.at("n").get<long long>();
    const int d = cfg.at("d").get<int>();
    const std::uint64_t seed = cfg.value("seed", 0ULL);
    const std::string out_path = cfg.at("out").get<std::string>();

    const dsl::Scenario sc = dsl::make_scenario(case_id, n, d);
    const dsl::SimulatedDataset sim = dsl::gen_scenario(sc, seed);
    dsl::write_dataset_csv(sim.dataset, out_path);

    if (cfg.contains("oracle")) {
      if (!cfg.contains("grid_j")) {
        throw dsl::invalid_input("sim: oracle output needs grid_j");
      }
      const int grid_j = cfg.at("grid_j").get<int>();
      const dsl::TimeGrid grid =
          dsl::build_time_grid(sim.dataset, grid_j, cfg.value("grid_qlo", 0.2),
                               cfg.value("grid_qhi", 0.8));
      dsl::MatrixXd table(sim.dataset.n(), grid.j() + 1);
      std::vector<std::string> header{"index"};
      for (Eigen::Index j = 0; j < grid.j(); ++j) {
        header.push_back("true_cate@" + dsl::format_double(grid.times()[j]));
      }
      for (Eigen::Index i = 0; i < sim.dataset.n(); ++i) {
        table(i, 0) = static_cast<double>(i);
        table.row(i).tail(grid.j()) =
            dsl::true_cate_grid(sc, sim.dataset.x_row(i).transpose(), grid.times())
                .transpose();
      }
      dsl::write_table_csv(cfg.at("oracle").get<std::string>(), header, table);
    }
  });
}

dsl_status dsl_cmd_pseudo(const char* config_json) {
  if (auto s = require(config_json != nullptr, "null config")) return s;
  return guarded([&] {
    const auto cfg = nlohmann::json::parse(config_json);
    const dsl::Dataset data =
        dsl::read_dataset(cfg.at("in").get<std::string>(), /*impute_missing=*/true);
    const dsl::TimeGrid grid =
        dsl::build_time_grid(data, cfg.at("grid_j").get<int>(),
                             cfg.value("grid_qlo", 0.2), cfg.value("grid_qhi", 0.8));
    dsl::FittedNuisance spec;
    spec.eps_clip = cfg.value("eps_clip", dsl::kDefaultEpsClip);
    const auto phi = dsl::cross_fit_pseudo_outcomes(
        data, grid, cfg.value("k", 5), cfg.value("seed", 0ULL), spec);
    dsl::write_phi_csv(phi, cfg.at("out").get<std::string>());
  });
}

dsl_status dsl_cmd_run(const char* config_json, const char* out_dir,
                       char** summary_json_out) {
  if (auto s = require(config_json != nullptr, "null config")) return s;
  return guarded([&] {
    const dsl::ExperimentConfig config = dsl::experiment_config_from_json(config_json);
    std::optional<std::string> dir;
    if (out_dir && std::strlen(out_dir) > 0) {
      std::filesystem::create_directories(out_dir);
      dir = out_dir;
    }
    const dsl::ExperimentSummary summary = dsl::run_experiment(config, dir);
    if (summary_json_out) {
      const std::string text = dsl::summary_to_json(summary, config);
      char* buf = static_cast<char*>(std::malloc(text.size() + 1));
      if (!buf) throw std::bad_alloc();
      std::memcpy(buf, text.c_str(), text.size() + 1);
      *summary_json_out = buf;
    }
  });
}

dsl_status dsl_cmd_apply(const char* config_json) {
  if (auto s = require(config_json != nullptr, "null config")) return s;
  return guarded([&] {
    const auto cfg = nlohmann::json::parse(config_json);
    dsl::TrainConfig tc;
    tc.hidden = {64, 32, 16};  // application-mode default architecture
    if (cfg.contains("train")) {
      tc = dsl::train_config_from_json(cfg["train"].dump());
      if (!cfg["train"].contains("hidden")) tc.hidden = {64, 32, 16};
    }
    std::vector<dsl::ProfileQuery> profiles;
    if (cfg.contains("profiles")) {
      std::ifstream in(cfg.at("profiles").get<std::string>());
      if (!in) {
        throw dsl::io_error("cannot open profiles file: " +
                            cfg.at("profiles").get<std::string>());
      }
      std::stringstream ss;
      ss << in.rdbuf();
      profiles = dsl::profiles_from_json(ss.str());
    }
    const auto result = dsl::estimate_cate_real_csv(
        cfg.at("data").get<std::string>(), cfg.value("j", 10),
        cfg.value("grid_qlo", 0.2), cfg.value("grid_qhi", 0.8), cfg.value("k", 5),
        cfg.value("seed", 0ULL), tc, profiles);
    const std::string out_dir = cfg.at("out").get<std::string>();
    std::filesystem::create_directories(out_dir);
    dsl::write_trajectories_csv(result.rows, out_dir + "/trajectories.csv");
    dsl::save_model(result.model, out_dir + "/model.json");
  });
}

void dsl_string_free(char* s) { std::free(s); }

}  // extern "C"
