#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsl/csv.hpp"
#include "dsl/harness.hpp"

namespace dsl {

namespace {

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write file: " + path);
  out << text;
  if (!out) throw io_error("write failed: " + path);
}

json replicate_to_json(const ReplicateMetrics& m) {
  return json{{"replicate", m.replicate_index},
              {"bias", m.bias},
              {"mse", m.mse},
              {"final_train_loss", m.final_train_loss},
              {"nonconverged_fits", m.nonconverged_fits},
              {"cap_breaches", m.cap_breaches}};
}

json config_to_json_obj(const ExperimentConfig& c) {
  return json{{"case", c.case_id},
              {"n_train", c.n_train},
              {"n_test", c.n_test},
              {"d", c.d},
              {"j", c.j},
              {"k", c.k},
              {"replicates", c.replicates},
              {"seed", c.master_seed},
              {"nuisance", c.nuisance_mode == NuisanceMode::fitted
                               ? "fitted"
                               : (c.misspec == Misspec::none
                                      ? "oracle"
                                      : misspec_name(c.misspec))},
              {"eps_clip", c.eps_clip},
              {"grid_qlo", c.grid_qlo},
              {"grid_qhi", c.grid_qhi},
              {"train",
               {{"learning_rate", c.train.learning_rate},
                {"adam_beta1", c.train.adam_beta1},
                {"adam_beta2", c.train.adam_beta2},
                {"adam_eps", c.train.adam_eps},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"hidden", c.train.hidden},
                {"magnitude_clamp", c.train.magnitude_clamp}}}};
}

}  // namespace

std::string summary_to_json(const ExperimentSummary& s, const ExperimentConfig& c) {
  json j;
  j["config"] = config_to_json_obj(c);
  j["mean_bias"] = s.mean_bias;
  j["bias_ci"] = {s.bias_ci_lo, s.bias_ci_hi};
  j["mean_mse"] = s.mean_mse;
  j["mse_ci"] = {s.mse_ci_lo, s.mse_ci_hi};
  json reps = json::array();
  for (const auto& m : s.per_replicate) reps.push_back(replicate_to_json(m));
  j["per_replicate"] = std::move(reps);
  return j.dump(2);
}

ExperimentSummary summary_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSummary s;
  s.mean_bias = j.at("mean_bias").get<double>();
  s.bias_ci_lo = j.at("bias_ci")[0].get<double>();
  s.bias_ci_hi = j.at("bias_ci")[1].get<double>();
  s.mean_mse = j.at("mean_mse").get<double>();
  s.mse_ci_lo = j.at("mse_ci")[0].get<double>();
  s.mse_ci_hi = j.at("mse_ci")[1].get<double>();
  for (const auto& r : j.at("per_replicate")) {
    ReplicateMetrics m;
    m.replicate_index = r.at("replicate").get<int>();
    m.bias = r.at("bias").get<double>();
    m.mse = r.at("mse").get<double>();
    m.final_train_loss = r.at("final_train_loss").get<double>();
    m.nonconverged_fits = r.at("nonconverged_fits").get<int>();
    m.cap_breaches = r.at("cap_breaches").get<int>();
    s.per_replicate.push_back(m);
  }
  return s;
}

void write_summary_json(const ExperimentSummary& s, const ExperimentConfig& c,
                        const std::string& path) {
  write_text(path, summary_to_json(s, c));
}

void write_replicates_csv(const std::vector<ReplicateMetrics>& rows,
                          const std::string& path) {
  MatrixXd table(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    table(r, 0) = rows[i].replicate_index;
    table(r, 1) = rows[i].bias;
    table(r, 2) = rows[i].mse;
    table(r, 3) = rows[i].final_train_loss;
    table(r, 4) = rows[i].nonconverged_fits;
    table(r, 5) = rows[i].cap_breaches;
  }
  write_table_csv(path,
                  {"replicate", "bias", "mse", "final_train_loss",
                   "nonconverged_fits", "cap_breaches"},
                  table);
}

void write_run_log_json(const ExperimentConfig& config,
                        const std::vector<ReplicateMetrics>& rows,
                        const std::string& status, const std::string& path) {
  json j;
  j["status"] = status;
  j["config"] = config_to_json_obj(config);
  j["completed_replicates"] = rows.size();
  int nonconverged = 0, breaches = 0;
  json reps = json::array();
  for (const auto& m : rows) {
    reps.push_back(replicate_to_json(m));
    nonconverged += m.nonconverged_fits;
    breaches += m.cap_breaches;
  }
  j["total_nonconverged_fits"] = nonconverged;
  j["total_cap_breaches"] = breaches;
  j["replicates"] = std::move(reps);
  write_text(path, j.dump(2));
}

void write_trajectories_csv(const std::vector<TrajectoryRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write file: " + path);
  out << "profile,covariate_value,t,cate\n";
  for (const auto& r : rows) {
    out << r.profile << "," << format_double(r.covariate_value) << ","
        << format_double(r.t) << "," << format_double(r.cate) << "\n";
  }
  if (!out) throw io_error("write failed: " + path);
}

void write_phi_csv(const PseudoOutcomeMatrix& phi, const std::string& path) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < phi.grid.j(); ++j) {
    header.push_back("t=" + format_double(phi.grid.times()[j]));
  }
  write_table_csv(path, header, phi.values);
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  return config_to_json_obj(config).dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("case")) {
    if (j["case"].is_string()) {
      c = experiment_preset(j["case"].get<std::string>());
    } else {
      c = experiment_preset(std::to_string(j["case"].get<int>()));
    }
  }
  if (j.contains("n_train")) c.n_train = j["n_train"].get<Eigen::Index>();
  if (j.contains("n_test")) c.n_test = j["n_test"].get<Eigen::Index>();
  if (j.contains("d")) c.d = j["d"].get<int>();
  if (j.contains("j")) c.j = j["j"].get<int>();
  if (j.contains("k")) c.k = j["k"].get<int>();
  if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
  if (j.contains("seed")) c.master_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("nuisance")) {
    const std::string mode = j["nuisance"].get<std::string>();
    if (mode == "fitted") {
      c.nuisance_mode = NuisanceMode::fitted;
    } else if (mode == "oracle") {
      c.nuisance_mode = NuisanceMode::oracle;
      c.misspec = Misspec::none;
    } else {
      c.nuisance_mode = NuisanceMode::oracle;
      c.misspec = misspec_from_name(mode);
    }
  }
  if (j.contains("eps_clip")) c.eps_clip = j["eps_clip"].get<double>();
  if (j.contains("grid_qlo")) c.grid_qlo = j["grid_qlo"].get<double>();
  if (j.contains("grid_qhi")) c.grid_qhi = j["grid_qhi"].get<double>();
  if (j.contains("train")) {
    c.train = train_config_from_json(j["train"].dump());
  }
  return c;
}

TrainConfig train_config_from_json(const std::string& text) {
  const json t = json::parse(text);
  TrainConfig c;
  if (t.contains("learning_rate")) c.learning_rate = t["learning_rate"].get<double>();
  if (t.contains("adam_beta1")) c.adam_beta1 = t["adam_beta1"].get<double>();
  if (t.contains("adam_beta2")) c.adam_beta2 = t["adam_beta2"].get<double>();
  if (t.contains("adam_eps")) c.adam_eps = t["adam_eps"].get<double>();
  if (t.contains("epochs")) c.epochs = t["epochs"].get<int>();
  if (t.contains("batch_size")) c.batch_size = t["batch_size"].get<int>();
  if (t.contains("hidden")) c.hidden = t["hidden"].get<std::vector<int>>();
  if (t.contains("seed")) c.seed = t["seed"].get<std::uint64_t>();
  if (t.contains("magnitude_clamp")) c.magnitude_clamp = t["magnitude_clamp"].get<double>();
  return c;
}

std::vector<ProfileQuery> profiles_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_array()) throw invalid_input("profiles JSON must be an array");
  std::vector<ProfileQuery> out;
  for (const auto& p : j) {
    ProfileQuery q;
    q.name = p.value("name", "");
    if (!p.contains("varying")) {
      throw invalid_input("profile entry missing 'varying' covariate index");
    }
    q.varying_covariate = p.at("varying").get<int>();
    q.values = p.at("values").get<std::vector<double>>();
    if (p.contains("fixed")) {
      const auto fixed = p.at("fixed").get<std::vector<double>>();
      q.fixed_profile = Eigen::Map<const VectorXd>(
          fixed.data(), static_cast<Eigen::Index>(fixed.size()));
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace dsl
