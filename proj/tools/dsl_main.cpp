// dsl: command-line front end for the deep survival learner shared library.
// Subcommands map onto the JSON-driven entry points of the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsl.h"

namespace {

using nlohmann::json;

int report(dsl_status status) {
  if (status == DSL_OK) return 0;
  std::fprintf(stderr, "error: %s\n", dsl_last_error());
  return static_cast<int>(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot open config file %s\n", path.c_str());
    std::exit(2);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dsl - doubly robust CATE estimation for survival data"};
  app.require_subcommand(1);

  // --- sim ---
  auto* sim = app.add_subcommand("sim", "generate a simulated dataset as CSV");
  int sim_case = 1;
  long long sim_n = 800;
  int sim_d = 30;
  std::uint64_t sim_seed = 0;
  std::string sim_out, sim_oracle;
  int sim_grid_j = 0;
  sim->add_option("--case", sim_case, "scenario: 1, 2 or 3")->required();
  sim->add_option("--n", sim_n, "sample size")->required();
  sim->add_option("--d", sim_d, "covariate dimension")->required();
  sim->add_option("--seed", sim_seed, "generator seed")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();
  sim->add_option("--oracle", sim_oracle, "also write true CATE values here");
  sim->add_option("--grid-j", sim_grid_j, "grid size for the oracle output");

  // --- pseudo ---
  auto* pseudo = app.add_subcommand("pseudo", "cross-fitted pseudo-outcomes to CSV");
  std::string ps_in, ps_out;
  int ps_j = 1, ps_k = 5;
  std::uint64_t ps_seed = 0;
  pseudo->add_option("--in", ps_in, "input dataset CSV")->required();
  pseudo->add_option("--grid-j", ps_j, "number of grid times")->required();
  pseudo->add_option("--k", ps_k, "cross-fitting folds");
  pseudo->add_option("--seed", ps_seed, "fold-assignment seed")->required();
  pseudo->add_option("--out", ps_out, "output CSV path")->required();

  // --- run ---
  auto* run = app.add_subcommand("run", "simulation experiment with replicates");
  std::string run_case = "1", run_nuisance, run_out, run_config;
  int run_j = -1, run_k = -1, run_replicates = -1;
  long long run_ntrain = -1, run_ntest = -1;
  int run_d = -1;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  int run_epochs = -1;
  std::vector<int> run_hidden;
  run->add_option("--case", run_case, "1, 2, 3 or appendix");
  run->add_option("--j", run_j, "grid size");
  run->add_option("--replicates", run_replicates, "number of replicates");
  run->add_option("--seed", run_seed, "master seed")->each([&](const std::string&) {
    run_seed_set = true;
  });
  run->add_option("--nuisance", run_nuisance,
                  "fitted, oracle, wrong-s, wrong-e or wrong-g");
  run->add_option("--k", run_k, "cross-fitting folds");
  run->add_option("--n-train", run_ntrain, "training sample size");
  run->add_option("--n-test", run_ntest, "testing sample size");
  run->add_option("--d", run_d, "covariate dimension");
  run->add_option("--epochs", run_epochs, "training epochs");
  run->add_option("--hidden", run_hidden, "hidden layer widths");
  run->add_option("--config", run_config, "JSON config file (flags override it)");
  run->add_option("--out", run_out, "output directory")->required();

  // --- apply ---
  auto* apply = app.add_subcommand("apply", "estimate CATE trajectories from a CSV");
  std::string ap_data, ap_profiles, ap_out;
  int ap_j = 10, ap_k = 5;
  std::uint64_t ap_seed = 0;
  std::vector<int> ap_hidden;
  int ap_epochs = -1;
  apply->add_option("--data", ap_data, "dataset CSV")->required();
  apply->add_option("--j", ap_j, "number of grid times");
  apply->add_option("--profiles", ap_profiles, "profile queries (JSON)");
  apply->add_option("--k", ap_k, "cross-fitting folds");
  apply->add_option("--seed", ap_seed, "pipeline seed");
  apply->add_option("--hidden", ap_hidden, "hidden layer widths");
  apply->add_option("--epochs", ap_epochs, "training epochs");
  apply->add_option("--out", ap_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    json cfg{{"case", sim_case}, {"n", sim_n},       {"d", sim_d},
             {"seed", sim_seed}, {"out", sim_out}};
    if (!sim_oracle.empty()) {
      cfg["oracle"] = sim_oracle;
      cfg["grid_j"] = sim_grid_j;
    }
    return report(dsl_cmd_sim(cfg.dump().c_str()));
  }

  if (pseudo->parsed()) {
    json cfg{{"in", ps_in}, {"grid_j", ps_j},  {"k", ps_k},
             {"seed", ps_seed}, {"out", ps_out}};
    return report(dsl_cmd_pseudo(cfg.dump().c_str()));
  }

  if (run->parsed()) {
    json cfg = json::object();
    if (!run_config.empty()) cfg = json::parse(read_file(run_config));
    if (run->count("--case") || !cfg.contains("case")) cfg["case"] = run_case;
    if (run_j > 0) cfg["j"] = run_j;
    if (run_replicates > 0) cfg["replicates"] = run_replicates;
    if (run_seed_set || !cfg.contains("seed")) cfg["seed"] = run_seed;
    if (!run_nuisance.empty()) cfg["nuisance"] = run_nuisance;
    if (run_k > 0) cfg["k"] = run_k;
    if (run_ntrain > 0) cfg["n_train"] = run_ntrain;
    if (run_ntest > 0) cfg["n_test"] = run_ntest;
    if (run_d > 0) cfg["d"] = run_d;
    if (run_epochs > 0) cfg["train"]["epochs"] = run_epochs;
    if (!run_hidden.empty()) cfg["train"]["hidden"] = run_hidden;

    char* summary = nullptr;
    const dsl_status status = dsl_cmd_run(cfg.dump().c_str(), run_out.c_str(), &summary);
    if (status == DSL_OK && summary) {
      std::printf("%s\n", summary);
      dsl_string_free(summary);
    }
    return report(status);
  }

  if (apply->parsed()) {
    json cfg{{"data", ap_data}, {"j", ap_j}, {"k", ap_k},
             {"seed", ap_seed}, {"out", ap_out}};
    if (!ap_profiles.empty()) cfg["profiles"] = ap_profiles;
    if (!ap_hidden.empty()) cfg["train"]["hidden"] = ap_hidden;
    if (ap_epochs > 0) cfg["train"]["epochs"] = ap_epochs;
    return report(dsl_cmd_apply(cfg.dump().c_str()));
  }

  return 0;
}
