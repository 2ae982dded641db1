#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "dlms/harness.hpp"
#include "dlms/presets.hpp"

using namespace dlms;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / "dlms-tests" / leaf;
  fs::create_directories(p);
  return p.string();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.name = "small";
  cfg.seed = 321;
  cfg.trials = 3;
  cfg.horizon = 60;
  cfg.network.nodes = 3;
  cfg.model.functions = 1;
  cfg.model.basis_count = 2;
  cfg.a1 = {"identity", {}};
  cfg.a2 = {"uniform", {}};
  cfg.c = {"metropolis", {}};
  cfg.step_size = 0.05;
  cfg.theory_overlay = true;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config JSON round trip preserves the experiment") {
  ExperimentConfig cfg = load_preset("s5a");
  ExperimentConfig again = config_from_json_text(config_to_json_text(cfg));
  CHECK(again.name == cfg.name);
  CHECK(again.seed == cfg.seed);
  CHECK(again.horizon == cfg.horizon);
  CHECK(again.trials == cfg.trials);
  CHECK(again.a2.name == "uniform");
  CHECK(again.step_size.has_value());
  CHECK(*again.step_size == doctest::Approx(0.01));
}

TEST_CASE("config validation rejects bad inputs before any compute") {
  CHECK_THROWS_AS(config_from_json_text("{\"trials\": 0}"), std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("{\"horizon\": 0}"), std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("{\"scenario\": \"bogus\"}"), std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("{\"algorithms\": [\"simplex\"]}"), std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("{\"combination\": {\"a2\": \"median\"}}"),
                  std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("{\"step_size\": -0.1}"), std::domain_error);
  CHECK_THROWS_AS(config_from_json_text("not json"), std::domain_error);
}

TEST_CASE("every preset parses, validates, and builds") {
  for (const auto& name : preset_names()) {
    ExperimentConfig cfg = load_preset(name);
    CHECK(cfg.name == name);
    Experiment exp = build_experiment(cfg);
    CHECK(exp.graph->nodes() == exp.basis->nodes());
    CHECK(exp.step_sizes.size() == exp.graph->nodes());
  }
}

TEST_CASE("model draw is a pure function of the seed") {
  ExperimentConfig cfg = small_config();
  Experiment a = build_experiment(cfg);
  Experiment b = build_experiment(cfg);
  CHECK(a.truth_coeffs == b.truth_coeffs);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.covariances[k] == b.covariances[k]);
    CHECK(a.noise_variances[k] == b.noise_variances[k]);
  }
  cfg.seed += 1;
  Experiment c = build_experiment(cfg);
  CHECK(a.truth_coeffs != c.truth_coeffs);
}

TEST_CASE("the reference 1D preset step size sits below every stability bound") {
  Experiment exp = build_experiment(load_preset("s5a"));
  Eigen::VectorXd bounds = stability_bounds(*exp.basis, exp.policy, exp.covariances);
  for (int k = 0; k < exp.graph->nodes(); ++k) CHECK(exp.step_sizes[k] < bounds[k]);
}

TEST_CASE("auto step sizes respect the stability bound") {
  ExperimentConfig cfg = small_config();
  cfg.step_size.reset();
  cfg.auto_step_safety = 0.1;
  Experiment exp = build_experiment(cfg);
  Eigen::VectorXd bounds = stability_bounds(*exp.basis, exp.policy, exp.covariances);
  for (int k = 0; k < 3; ++k) {
    CHECK(exp.step_sizes[k] > 0.0);
    CHECK(exp.step_sizes[k] == doctest::Approx(0.1 * bounds[k]));
  }
}

TEST_CASE("run produces the averaging identity and stable CSV schema") {
  ExperimentConfig cfg = small_config();
  cfg.output_dir = tmp_dir("avg");
  RunResult r = run(cfg);
  const MetricsSeries& s = r.series.at("diffusion");
  REQUIRE(s.nodes == 3);
  for (long i = 0; i < s.horizon; ++i) {
    const double net = s.msd_w.row(i).head(3).mean();
    CHECK(s.msd_w(i, 3) == doctest::Approx(net).epsilon(1e-15));
    const double net_h = s.msd_h.row(i).head(3).mean();
    CHECK(s.msd_h(i, 3) == doctest::Approx(net_h).epsilon(1e-15));
  }
  const std::string csv = slurp(cfg.output_dir + "/sim_diffusion.csv");
  CHECK(csv.rfind("iter,node,msd_w_db,msd_h_db,emse_db,msd_w_theory_db,msd_h_theory_db\n", 0) ==
        0);
  CHECK(fs::exists(cfg.output_dir + "/summary.json"));
  CHECK(fs::exists(cfg.output_dir + "/theory.json"));
  CHECK(slurp(cfg.output_dir + "/msd_w.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical CSV output") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 4;
  cfg.output_dir = tmp_dir("det-a");
  cfg.threads = 1;
  run(cfg);
  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = tmp_dir("det-b");
  cfg2.threads = 2;  // parallel reduction must not change the bytes
  run(cfg2);
  CHECK(slurp(cfg.output_dir + "/sim_diffusion.csv") ==
        slurp(cfg2.output_dir + "/sim_diffusion.csv"));
}

TEST_CASE("compare reports zero gap against matching inputs and flags mismatches") {
  ExperimentConfig cfg = small_config();
  cfg.output_dir = tmp_dir("cmp");
  run(cfg);
  const std::string sim = cfg.output_dir + "/sim_diffusion.csv";
  const std::string theory = cfg.output_dir + "/theory.json";

  CompareOptions strict;
  strict.skip_iterations = 5;
  CompareResult r = compare(sim, theory, strict);
  CHECK(r.compared_iterations == cfg.horizon - 5);
  CHECK(r.steady_gap_w_db >= 0.0);

  // Identical inputs: compare the theory curves against themselves by writing
  // a synthetic CSV from the theory columns.
  {
    NetworkTrajectory net = read_network_trajectory(sim);
    MetricsSeries self;
    self.horizon = cfg.horizon;
    self.nodes = 0;
    self.msd_w.resize(cfg.horizon, 1);
    self.msd_h.resize(cfg.horizon, 1);
    self.emse.resize(cfg.horizon, 1);
    for (long i = 0; i < cfg.horizon; ++i) {
      self.msd_w(i, 0) = std::pow(10.0, net.msd_w_db[i] / 10.0);
      self.msd_h(i, 0) = std::pow(10.0, net.msd_h_db[i] / 10.0);
      self.emse(i, 0) = std::pow(10.0, net.emse_db[i] / 10.0);
    }
    const std::string self_csv = cfg.output_dir + "/self.csv";
    write_trajectory_csv(self_csv, self);
    // Tiny theory report whose curves are exactly the same values.
    std::ofstream out(cfg.output_dir + "/self_theory.json");
    out.precision(17);
    out << "{\"curves\": {\"msd_w_db\": [";
    for (long i = 0; i < cfg.horizon; ++i)
      out << (i ? "," : "") << net.msd_w_db[i];
    out << "], \"msd_h_db\": [";
    for (long i = 0; i < cfg.horizon; ++i)
      out << (i ? "," : "") << net.msd_h_db[i];
    out << "]}}";
    out.close();
    // The CSV round trip quantizes to 10 significant digits.
    CompareResult same = compare(self_csv, cfg.output_dir + "/self_theory.json", strict);
    CHECK(same.transient_gap_w_db < 1e-7);
    CHECK(same.transient_gap_h_db < 1e-7);
    CHECK(same.steady_gap_w_db < 1e-7);
  }

  // Horizon mismatch is a structured error.
  ExperimentConfig other = small_config();
  other.horizon = 30;
  other.output_dir = tmp_dir("cmp-short");
  run(other);
  CHECK_THROWS_AS(compare(other.output_dir + "/sim_diffusion.csv", theory, strict),
                  std::runtime_error);

  // Garbled CSV header is rejected.
  const std::string bad = cfg.output_dir + "/bad.csv";
  std::ofstream(bad) << "wrong,header\n1,2\n";
  CHECK_THROWS_AS(read_network_trajectory(bad), std::runtime_error);
}

TEST_CASE("fewer trials compare worse against theory") {
  ExperimentConfig cfg = small_config();
  cfg.horizon = 400;
  cfg.trials = 100;
  cfg.output_dir = tmp_dir("many");
  run(cfg);
  ExperimentConfig few = cfg;
  few.trials = 4;
  few.output_dir = tmp_dir("few");
  run(few);
  CompareOptions opt;
  opt.skip_iterations = 10;
  CompareResult many_r =
      compare(cfg.output_dir + "/sim_diffusion.csv", cfg.output_dir + "/theory.json", opt);
  CompareResult few_r =
      compare(few.output_dir + "/sim_diffusion.csv", few.output_dir + "/theory.json", opt);
  CHECK(few_r.transient_gap_w_db > many_r.transient_gap_w_db);
}

TEST_CASE("centralized step scaling matches the distributed steady level") {
  // The sum-form centralized gradient is N times a node's; at 1/N scale the
  // two estimators settle near the same coefficient-domain steady state.
  ExperimentConfig cfg = small_config();
  cfg.network.nodes = 4;
  cfg.horizon = 4000;
  cfg.trials = 20;
  cfg.step_size = 0.04;
  cfg.algorithms = {"diffusion", "centralized"};
  cfg.theory_overlay = false;

  cfg.centralized_step_scale = 1.0;
  cfg.output_dir = tmp_dir("cscale-sum");
  RunResult literal = run(cfg);
  cfg.centralized_step_scale = 0.25;  // 1/N
  cfg.output_dir = tmp_dir("cscale-avg");
  RunResult averaged = run(cfg);

  auto gap = [](const RunResult& r) {
    return std::abs(r.sim_steady.at("centralized").msd_w_db -
                    r.sim_steady.at("diffusion").msd_w_db);
  };
  CHECK(gap(averaged) < 1.0);
  CHECK(gap(literal) > gap(averaged) + 3.0);
}

TEST_CASE("predict reports non-convergence without throwing") {
  ExperimentConfig cfg = load_preset("example2");
  cfg.output_dir = tmp_dir("ex2");
  PredictResult r = predict(cfg);
  CHECK(r.verdict == "non-convergent");
  CHECK_FALSE(r.steady.has_value());
  const std::string text = slurp(r.theory_path);
  CHECK(text.find("offending_eigenvalues") != std::string::npos);
}

TEST_CASE("cooperative combinations repair rank deficiency in the 2D mean limit") {
  // Per-node covariances are far from full rank with a grid-spanning basis,
  // yet the combination matrices make the network transition strictly stable
  // and the mean limit reproduces the surface at every node.
  ExperimentConfig cfg = load_preset("poisson2d");
  cfg.poisson.interior_x = 3;
  cfg.poisson.interior_y = 3;
  cfg.poisson.basis_count_x = 3;
  cfg.poisson.basis_count_y = 3;
  cfg.poisson.kappa = 0.4;  // wider bumps on the tiny grid
  Experiment exp = build_experiment(cfg);
  TheoryArtifacts art = assemble(*exp.basis, exp.policy, exp.covariances, exp.noise_variances,
                                 exp.step_sizes, exp.truth_coeffs);
  int max_rank = 0;
  for (int k = 0; k < art.nodes; ++k) max_rank = std::max(max_rank, art.node_rank[k]);
  CHECK(max_rank < art.block());  // every node covariance is rank deficient
  SpectralData spectral = spectral_data(art, cfg.unit_tolerance);
  CHECK(spectral.classification.verdict == ConvergenceVerdict::StrictlyStable);
  const Eigen::VectorXd limit = mean_limit(art, spectral, Eigen::VectorXd::Zero(art.dim()));
  double herr = 0.0;
  for (int k = 0; k < art.nodes; ++k) {
    const Eigen::VectorXd h =
        exp.basis->apply_block(k, limit.segment(k * art.block(), art.block()));
    herr = std::max(herr, std::abs(h[0] - exp.truth_params[k][0]));
  }
  CHECK(herr < 1e-8);
}

TEST_CASE("poisson demo on a small spanning-basis grid recovers the truth exactly") {
  ExperimentConfig cfg = load_preset("poisson2d");
  cfg.output_dir = tmp_dir("p2d-small");
  cfg.poisson.interior_x = 5;
  cfg.poisson.interior_y = 5;
  cfg.poisson.basis_count_x = 5;
  cfg.poisson.basis_count_y = 5;
  cfg.poisson.zero_noise = true;
  cfg.algorithms = {"non-cooperative"};
  cfg.a1 = {"identity", {}};
  cfg.a2 = {"identity", {}};
  cfg.c = {"identity", {}};
  cfg.step_size.reset();
  cfg.auto_step_safety = 0.5;  // half the rank-one bound: one-step convergence per node
  cfg.trials = 1;
  cfg.horizon = 20;
  PoissonDemoResult r = poisson_demo(cfg);
  CHECK(r.solver_residual <= cfg.poisson.solver_tolerance);
  CHECK(r.surface_max_error < 1e-8);
  CHECK(fs::exists(cfg.output_dir + "/true_surface.csv"));
  CHECK(fs::exists(cfg.output_dir + "/estimated_surface.svg"));
  CHECK(fs::exists(cfg.output_dir + "/msd_map_db.csv"));
  CHECK(slurp(cfg.output_dir + "/msd_map_db.svg").rfind("<svg", 0) == 0);
}
