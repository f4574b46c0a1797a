// Command-line front end: dataset simulation, single-shot estimation, the
// full simulation-study harness and the Fisher-information checker.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lrt/estimators.hpp"
#include "lrt/experiments.hpp"
#include "lrt/fisher_bounds.hpp"
#include "lrt/io.hpp"
#include "lrt/model_selection.hpp"
#include "lrt/sampler.hpp"
#include "lrt/state_gen.hpp"

namespace {

using namespace lrt;

std::string batch_path(const std::string& data_out, int index) {
  const std::filesystem::path p(data_out);
  std::filesystem::path out = p.parent_path() / p.stem();
  return out.string() + ".batch" + std::to_string(index) + p.extension().string();
}

int run_simulate(int k, int rank, long long n, int batches, std::uint64_t seed,
                 const std::string& state_out, const std::string& data_out) {
  const int d = 1 << k;
  const DensityMatrix state = random_rank_r_state({d, rank, rng::mix(seed, 1)});
  if (!state_out.empty()) {
    io::write_state_json(state_out, k, state.mat());
    std::cout << "wrote state " << state_out << "\n";
  }
  const std::uint64_t data_seed = rng::mix(seed, 2);
  if (batches <= 1) {
    io::write_dataset_json(data_out, simulate_dataset(state, n, data_seed));
    std::cout << "wrote dataset " << data_out << "\n";
    return 0;
  }
  const std::vector<CountsDataset> parts = split_batches(state, n, data_seed, batches);
  io::write_dataset_json(data_out, merge(parts));
  std::cout << "wrote dataset " << data_out << "\n";
  for (int b = 0; b < batches; ++b) {
    io::write_dataset_json(batch_path(data_out, b), parts[static_cast<std::size_t>(b)]);
    std::cout << "wrote batch " << batch_path(data_out, b) << "\n";
  }
  return 0;
}

int run_estimate(const std::string& method, const std::vector<std::string>& data_paths,
                 const std::string& state_path, double epsilon,
                 const std::string& out_path) {
  std::vector<CountsDataset> batches;
  batches.reserve(data_paths.size());
  for (const std::string& p : data_paths) batches.push_back(io::read_dataset_json(p));
  const CountsDataset merged = merge(batches);
  const int k = merged.k;
  const int d = 1 << k;
  const NoiseLevel nl = noise_level(k, merged.n, epsilon);

  Eigen::MatrixXcd estimate;
  int selected_rank = d;
  double chosen_constant = std::nan("");
  io::json cv_report;

  if (method == "ls") {
    estimate = least_squares(merged);
  } else if (method == "pen") {
    const PenalisedResult res = penalised(least_squares(merged), nl.nu);
    estimate = res.estimate;
    selected_rank = res.rank;
  } else if (method == "phys") {
    const PhysicalResult res =
        physical_threshold(trace_normalize(least_squares(merged)), nl.nu);
    estimate = res.estimate.mat();
    selected_rank = res.rank;
  } else if (method == "cv-rank") {
    const CvRankSelection res = cv_rank(batches);
    estimate = res.estimate;
    selected_rank = res.rank;
    cv_report = io::cv_report_to_json(res.report);
  } else if (method == "pen-cv") {
    const CvPenaltySelection res =
        cv_penalty_constant(batches, CvGrid::default_grid(), epsilon);
    estimate = res.estimate;
    selected_rank = res.rank;
    chosen_constant = res.constant;
    cv_report = io::cv_report_to_json(res.report);
  } else if (method == "phys-cv") {
    const CvThresholdSelection res =
        cv_threshold_constant(batches, CvGrid::default_grid(), epsilon);
    estimate = res.estimate.mat();
    selected_rank = res.rank;
    chosen_constant = res.constant;
    cv_report = io::cv_report_to_json(res.report);
  } else if (method == "oracle") {
    if (state_path.empty())
      throw std::invalid_argument("estimate --method oracle requires --state");
    const io::StateFile truth = io::read_state_json(state_path);
    const OracleResult res =
        oracle_truncation(least_squares(merged), DensityMatrix(truth.matrix));
    estimate = res.estimate;
    selected_rank = res.rank;
  } else {
    throw std::invalid_argument("unknown method: " + method);
  }

  io::json doc;
  doc["k"] = k;
  doc["matrix"] = io::matrix_to_json(estimate);
  doc["method"] = method;
  doc["selected_rank"] = selected_rank;
  doc["nu"] = nl.nu;
  if (!std::isnan(chosen_constant)) doc["chosen_constant"] = chosen_constant;
  if (!cv_report.is_null()) doc["cv_report"] = cv_report;

  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    io::write_text_file(out_path, doc.dump(2) + "\n");
    std::cout << "wrote estimate " << out_path << "\n";
  }
  return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& preset,
                       const std::string& out_dir, std::uint64_t seed, bool seed_set,
                       bool figures) {
  ExperimentConfig config;
  if (!config_path.empty())
    config = io::read_config_json(config_path);
  else if (preset == "desk")
    config = ExperimentConfig::desk_preset();
  else
    config = ExperimentConfig{};  // full-scale defaults
  if (seed_set) config.seed = seed;

  const std::vector<ExperimentRecord> records = run_experiment(config);
  const std::vector<SummaryRow> summary = aggregate(records);
  io::OutputPaths paths;
  paths.directory = out_dir;
  paths.figures = figures;
  for (const std::string& path : io::emit_outputs(summary, records, paths))
    std::cout << "wrote " << path << "\n";
  return 0;
}

int run_fisher_check(int d, int r, long long samples, std::uint64_t seed,
                     const std::string& out_path) {
  const MonteCarloFisher mc = avg_fisher_mc(d, r, samples, seed);
  const Eigen::MatrixXd tabulated = closed_form_avg_fisher(d, r);
  const Eigen::MatrixXd unit_cross =
      closed_form_avg_fisher(d, r, DdCrossConvention::unit);
  const ParamIndexer idx(d);

  const auto rel_dev = [&](int a, int b, const Eigen::MatrixXd& cf) {
    return std::abs(mc.mean(a, b) - cf(a, b)) / std::abs(cf(a, b));
  };

  double max_rel_offdiag = 0.0;  // re/im diagonal blocks
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      max_rel_offdiag =
          std::max(max_rel_offdiag, rel_dev(idx.re(i, j), idx.re(i, j), tabulated));
      max_rel_offdiag =
          std::max(max_rel_offdiag, rel_dev(idx.im(i, j), idx.im(i, j), tabulated));
    }

  double max_rel_dd_tab = 0.0, max_rel_dd_unit = 0.0, mixed_mc_avg = 0.0;
  int mixed_count = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const bool mixed = (i < r) != (j < r);
      max_rel_dd_tab =
          std::max(max_rel_dd_tab, rel_dev(idx.diag(i), idx.diag(j), tabulated));
      max_rel_dd_unit =
          std::max(max_rel_dd_unit, rel_dev(idx.diag(i), idx.diag(j), unit_cross));
      if (mixed) {
        mixed_mc_avg += mc.mean(idx.diag(i), idx.diag(j));
        ++mixed_count;
      }
    }
  if (mixed_count > 0) mixed_mc_avg /= mixed_count;

  // cross blocks (diag-re, diag-im, re-im) vanish in the closed form
  double max_cross_sigma = 0.0;
  for (int a = 0; a < idx.dim(); ++a)
    for (int b = 0; b < idx.dim(); ++b) {
      const bool a_diag = a < d, b_diag = b < d;
      const bool a_re = !a_diag && a < d + idx.off_pairs();
      const bool b_re = !b_diag && b < d + idx.off_pairs();
      const bool same_block = (a_diag && b_diag) || (a_re && b_re) ||
                              (!a_diag && !a_re && !b_diag && !b_re);
      if (same_block) continue;
      const double se = std::max(mc.std_error(a, b), 1e-300);
      max_cross_sigma = std::max(max_cross_sigma, std::abs(mc.mean(a, b)) / se);
    }

  const std::string matching =
      (max_rel_dd_unit <= max_rel_dd_tab) ? "unit" : "tabulated";
  const bool pass_offdiag = max_rel_offdiag <= 0.10;
  const bool pass_dd = std::min(max_rel_dd_tab, max_rel_dd_unit) <= 0.10;
  const bool pass_cross = max_cross_sigma <= 3.0;

  io::json doc;
  doc["d"] = d;
  doc["r"] = r;
  doc["samples"] = samples;
  doc["seed"] = seed;
  doc["minimax_bound"] = minimax_bound(d, r);
  doc["closed_form_tabulated"] = io::json::array();
  doc["closed_form_unit_cross"] = io::json::array();
  doc["mc_mean"] = io::json::array();
  doc["mc_std_error"] = io::json::array();
  for (int a = 0; a < idx.dim(); ++a) {
    io::json t = io::json::array(), u = io::json::array(), m = io::json::array(),
             s = io::json::array();
    for (int b = 0; b < idx.dim(); ++b) {
      t.push_back(tabulated(a, b));
      u.push_back(unit_cross(a, b));
      m.push_back(mc.mean(a, b));
      s.push_back(mc.std_error(a, b));
    }
    doc["closed_form_tabulated"].push_back(t);
    doc["closed_form_unit_cross"].push_back(u);
    doc["mc_mean"].push_back(m);
    doc["mc_std_error"].push_back(s);
  }
  doc["blocks"]["re_im"]["max_rel_deviation"] = max_rel_offdiag;
  doc["blocks"]["re_im"]["pass"] = pass_offdiag;
  doc["blocks"]["dd"]["max_rel_deviation_tabulated"] = max_rel_dd_tab;
  doc["blocks"]["dd"]["max_rel_deviation_unit_cross"] = max_rel_dd_unit;
  doc["blocks"]["dd"]["pass"] = pass_dd;
  doc["blocks"]["cross"]["max_abs_mean_over_se"] = max_cross_sigma;
  doc["blocks"]["cross"]["pass"] = pass_cross;
  doc["dd_cross_region"]["tabulated_value"] =
      static_cast<double>(r) / static_cast<double>(r + 1);
  doc["dd_cross_region"]["unit_value"] = 1.0;
  doc["dd_cross_region"]["mc_mean_average"] = mixed_mc_avg;
  doc["dd_cross_region"]["matching_convention"] = matching;
  doc["pass"] = pass_offdiag && pass_dd && pass_cross;

  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    io::write_text_file(out_path, doc.dump(2) + "\n");
    std::cout << "wrote report " << out_path << "\n";
  }
  return doc["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank quantum state tomography: simulation and estimation"};
  app.require_subcommand(1);

  // simulate
  int sim_k = 4, sim_rank = 1, sim_batches = 1;
  long long sim_n = 100;
  std::uint64_t sim_seed = 1;
  std::string sim_state_out, sim_data_out;
  CLI::App* sim = app.add_subcommand("simulate", "generate a random state and counts data");
  sim->add_option("--k", sim_k, "qubit count")->required()->check(CLI::Range(1, 10));
  sim->add_option("--rank", sim_rank, "state rank")->required();
  sim->add_option("--n", sim_n, "repetitions per setting")->required();
  sim->add_option("--batches", sim_batches, "number of independent batches");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--state-out", sim_state_out, "state JSON output path");
  sim->add_option("--data-out", sim_data_out, "dataset JSON output path")->required();

  // estimate
  std::string est_method, est_state, est_out;
  std::vector<std::string> est_data;
  double est_epsilon = 0.1;
  CLI::App* est = app.add_subcommand("estimate", "estimate a state from counts data");
  est->add_option("--method", est_method, "ls|pen|phys|cv-rank|pen-cv|phys-cv|oracle")
      ->required()
      ->check(CLI::IsMember({"ls", "pen", "phys", "cv-rank", "pen-cv", "phys-cv", "oracle"}));
  est->add_option("--data", est_data,
                  "dataset JSON path(s); cross-validated methods need one per batch")
      ->required()
      ->expected(-1);
  est->add_option("--state", est_state, "true state JSON (oracle method only)");
  est->add_option("--epsilon", est_epsilon, "confidence parameter for the noise level");
  est->add_option("--out", est_out, "estimate JSON output path (stdout if omitted)");

  // experiment
  std::string exp_config, exp_preset = "full", exp_out = "results";
  std::uint64_t exp_seed = 0;
  bool exp_no_svg = false;
  CLI::App* exp = app.add_subcommand("experiment", "run the simulation study");
  exp->add_option("--config", exp_config, "experiment config JSON path");
  exp->add_option("--preset", exp_preset, "full|desk (ignored with --config)")
      ->check(CLI::IsMember({"full", "desk"}));
  exp->add_option("--out", exp_out, "output directory");
  CLI::Option* seed_opt = exp->add_option("--seed", exp_seed, "override the master seed");
  exp->add_flag("--no-svg", exp_no_svg, "skip figure output");

  // fisher-check
  int fis_d = 4, fis_r = 2;
  long long fis_samples = 20000;
  std::uint64_t fis_seed = 1;
  std::string fis_out;
  CLI::App* fis = app.add_subcommand(
      "fisher-check", "compare Monte Carlo averaged Fisher information to closed forms");
  fis->add_option("--d", fis_d, "Hilbert space dimension")->required();
  fis->add_option("--r", fis_r, "state rank (>= 2)")->required();
  fis->add_option("--samples", fis_samples, "Haar samples");
  fis->add_option("--seed", fis_seed, "seed");
  fis->add_option("--out", fis_out, "report JSON output path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(sim_k, sim_rank, sim_n, sim_batches, sim_seed, sim_state_out,
                          sim_data_out);
    if (est->parsed())
      return run_estimate(est_method, est_data, est_state, est_epsilon, est_out);
    if (exp->parsed())
      return run_experiment_cmd(exp_config, exp_preset, exp_out, exp_seed,
                                seed_opt->count() > 0, !exp_no_svg);
    if (fis->parsed())
      return run_fisher_check(fis_d, fis_r, fis_samples, fis_seed, fis_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
