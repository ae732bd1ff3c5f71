// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every criterion passes. Heavy fixtures (simulated observation sequences and
// their ground truths) are computed once and shared between criteria.
//
// Radii quoted from the source experiment tables are half-support
// Gaspari-Cohn values; they are doubled when configuring the taper used here,
// whose radius parameter is the total support.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "otlpf/harness.hpp"
#include "otlpf/metrics.hpp"
#include "otlpf/thread_pool.hpp"
#include "reference_filters.hpp"

using namespace otlpf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  static const auto t0 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format(const char* fmt, ...) {
  char buffer[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buffer, sizeof(buffer), fmt, args);
  va_end(args);
  return buffer;
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

struct TwinFixture {
  ExperimentConfig config;
  std::shared_ptr<const ForwardModel> model;
  Simulation sim;
  GroundTruth truth;
};

const TwinFixture& st_linear_fixture() {
  static const TwinFixture fixture = [] {
    TwinFixture f;
    f.config.model = ModelKind::StLinear;
    f.config.seed = 20260809;
    f.model = make_model(f.config);
    f.sim = f.model->simulate_truth(config_num_times(f.config), truth_seed(f.config.seed));
    f.truth = kalman_ground_truth(
        *dynamic_cast<const StochasticTurbulenceModel*>(f.model.get()), f.sim.observations);
    return f;
  }();
  return fixture;
}

const TwinFixture& st_transformed_fixture() {
  static const TwinFixture fixture = [] {
    TwinFixture f;
    f.config.model = ModelKind::StTransformed;
    f.config.seed = 9042;
    f.config.pushforward_samples = 10000;
    f.model = make_model(f.config);
    f.sim = f.model->simulate_truth(config_num_times(f.config), truth_seed(f.config.seed));
    f.truth = make_ground_truth(f.config, *f.model, f.sim.observations);
    return f;
  }();
  return fixture;
}

// Best (minimum over radius cells) of the per-cell median of a metric.
struct BestCell {
  double value = std::numeric_limits<double>::infinity();
  double radius = 0.0;
  double median_assim_seconds = 0.0;
  double rmse_mean = std::numeric_limits<double>::infinity();
};

BestCell best_cell(const std::vector<MetricsRecord>& rows, double MetricsRecord::*metric) {
  std::map<double, std::vector<const MetricsRecord*>> cells;
  for (const auto& row : rows) {
    if (!row.error.empty()) continue;
    cells[row.radius].push_back(&row);
  }
  BestCell best;
  for (const auto& [radius, cell] : cells) {
    std::vector<double> values, times, means;
    for (const auto* row : cell) {
      values.push_back(row->*metric);
      times.push_back(row->assimilation_seconds);
      means.push_back(row->rmse_mean);
    }
    const double value = median(values);
    if (value < best.value) {
      best.value = value;
      best.radius = radius;
      best.median_assim_seconds = median(times);
      best.rmse_mean = median(means);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Criterion 1: exact OT against the brute-force permutation oracle
// ---------------------------------------------------------------------------

Outcome criterion_ot_exactness() {
  const auto tic = std::chrono::steady_clock::now();
  RngStream stream(111);
  double max_gap = 0.0, max_marginal = 0.0;
  int worst_nonzeros = 0;
  for (int p = 2; p <= 6; ++p) {
    for (int instance = 0; instance < 200; ++instance) {
      TransportProblem problem;
      problem.target_weights = Eigen::VectorXd::Constant(p, 1.0 / p);
      problem.cost.resize(p, p);
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) problem.cost(i, j) = stream.next_unit_halfopen();
      }
      const TransportPlan exact = solve_exact(problem);
      const TransportPlan brute = brute_force_uniform(problem.cost);
      max_gap = std::max(max_gap, std::abs(exact.objective - brute.objective) /
                                      (1.0 + std::abs(brute.objective)));
      const auto report = validate_plan(exact, problem.target_weights);
      max_marginal = std::max({max_marginal, report.max_row_error, report.max_col_error});
      worst_nonzeros = std::max(worst_nonzeros, exact.nonzero_count - (2 * p - 1));
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  const bool pass =
      max_gap <= 1e-12 && max_marginal <= 1e-12 && worst_nonzeros <= 0 && elapsed < 60.0;
  return {pass, format("1000 instances, max rel objective gap %.2e, max marginal err %.2e, "
                       "sparsity slack %d, %.1f s",
                       max_gap, max_marginal, worst_nonzeros, elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 2: Sinkhorn contract
// ---------------------------------------------------------------------------

Outcome criterion_sinkhorn() {
  const auto tic = std::chrono::steady_clock::now();
  const int instances = 50;
  const int p = 100;
  std::vector<double> marginal_err(instances, 0.0);
  std::vector<double> rel_gap(instances, 0.0);
  std::vector<int> monotone_ok(instances, 0);
  std::vector<std::string> failures(instances);

  ThreadPool::global().parallel_for(0, instances, [&](int instance) {
    RngStream stream(2222 + 13 * instance);
    TransportProblem problem;
    problem.cost.resize(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) problem.cost(i, j) = stream.next_unit_halfopen();
    }
    problem.target_weights.resize(p);
    for (int i = 0; i < p; ++i) problem.target_weights[i] = std::exp(stream.next_normal());
    problem.target_weights /= problem.target_weights.sum();
    try {
      const TransportPlan exact = solve_exact(problem);
      double previous = std::numeric_limits<double>::infinity();
      bool monotone = true;
      double entropic_objective = 0.0;
      SinkhornOptions options;
      options.max_iter = 300000;  // sublinear stragglers still converge to 1e-9
      for (double lambda : {1e-1, 1e-2, 1e-3}) {
        const TransportPlan plan = solve_entropic(problem, lambda, options);
        const auto report = validate_plan(plan, problem.target_weights);
        marginal_err[instance] =
            std::max({marginal_err[instance], report.max_row_error, report.max_col_error});
        // objectives carry O(tol * P * |c|) ~ 1e-7 numerical slack
        if (plan.objective > previous + 1e-6 || plan.objective < exact.objective - 1e-6) {
          monotone = false;
        }
        previous = plan.objective;
        entropic_objective = plan.objective;
      }
      monotone_ok[instance] = monotone ? 1 : 0;
      rel_gap[instance] = (entropic_objective - exact.objective) / exact.objective;
    } catch (const std::exception& e) {
      failures[instance] = e.what();
    }
  });

  double worst_marginal = 0.0, worst_gap = 0.0;
  bool all_monotone = true;
  std::string failure;
  for (int i = 0; i < instances; ++i) {
    if (!failures[i].empty()) failure = failures[i];
    worst_marginal = std::max(worst_marginal, marginal_err[i]);
    worst_gap = std::max(worst_gap, rel_gap[i]);
    all_monotone = all_monotone && monotone_ok[i] == 1;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  const bool pass = failure.empty() && worst_marginal <= 1e-9 && all_monotone &&
                    worst_gap <= 0.05 && elapsed < 120.0;
  std::string detail =
      format("50 instances, max marginal err %.2e, lambda=1e-3 rel gap max %.3f%%, "
             "monotone %s, %.1f s",
             worst_marginal, 100.0 * worst_gap, all_monotone ? "yes" : "NO", elapsed);
  if (!failure.empty()) detail += " [solver failure: " + failure + "]";
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// Criterion 3: ETKF against the exact Kalman posterior
// ---------------------------------------------------------------------------

Outcome criterion_etkf_vs_kf() {
  StParams params;
  params.state_dim = 8;
  params.num_obs = 4;
  params.num_times = 1;
  const StochasticTurbulenceModel model(params);
  const ObservationModel& obs = model.observation();
  const Simulation sim = model.simulate_truth(1, 314159);
  const Eigen::VectorXd y = sim.observations.row(0).transpose();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(obs.num_obs, params.state_dim);
  for (int l = 0; l < obs.num_obs; ++l) h(l, obs.node_index[l]) = 1.0;
  const Eigen::MatrixXd r =
      obs.noise_std * obs.noise_std * Eigen::MatrixXd::Identity(obs.num_obs, obs.num_obs);
  GaussianBelief prior;
  prior.mean = Eigen::VectorXd::Zero(params.state_dim);
  prior.cov = model.stationary_covariance();
  const GaussianBelief post = kf_assimilate(prior, h, r, y);

  const int p = 2000;
  const int seeds = 10;
  Eigen::VectorXd pooled_mean = Eigen::VectorXd::Zero(params.state_dim);
  Eigen::MatrixXd pooled_cov = Eigen::MatrixXd::Zero(params.state_dim, params.state_dim);
  for (int seed = 0; seed < seeds; ++seed) {
    Eigen::MatrixXd particles(p, params.state_dim);
    model.init_ensemble(particles, 1000 + seed);
    etkf_assimilate(particles, obs.predict_ensemble(particles), r, y);
    const Eigen::RowVectorXd mean = particles.colwise().mean();
    const Eigen::MatrixXd anom = particles.rowwise() - mean;
    pooled_mean += mean.transpose();
    pooled_cov += anom.transpose() * anom / (p - 1);
  }
  pooled_mean /= seeds;
  pooled_cov /= seeds;

  const double mean_rel =
      (pooled_mean - post.mean).cwiseAbs().maxCoeff() / post.mean.cwiseAbs().maxCoeff();
  const double cov_rel = (pooled_cov - post.cov).norm() / post.cov.norm();
  const bool pass = mean_rel <= 0.05 && cov_rel <= 0.10;
  return {pass, format("pooled over 10 seeds at P=2000: mean rel inf err %.3f (<=0.05), "
                       "cov rel Frobenius err %.3f (<=0.10)",
                       mean_rel, cov_rel)};
}

// ---------------------------------------------------------------------------
// Criterion 4: reduction identities
// ---------------------------------------------------------------------------

Outcome criterion_reduction_identities() {
  StParams params;
  params.state_dim = 48;
  params.num_obs = 6;
  const StochasticTurbulenceModel model(params);
  const ObservationModel& obs = model.observation();
  const PeriodicMesh mesh(params.state_dim);
  const PartitionOfUnity singleton =
      build_pou(build_equal_partition(mesh, params.state_dim), mesh,
                1.0 / params.state_dim, SubsampleMode::All);
  const PartitionOfUnity whole =
      build_pou(build_equal_partition(mesh, 1), mesh, 1.0 / params.state_dim,
                SubsampleMode::All);

  double worst_per_node = 0.0, worst_global = 0.0;
  RngStream stream(4040);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd particles(10, params.state_dim);
    model.init_ensemble(particles, 500 + trial);
    Eigen::VectorXd y(obs.num_obs);
    for (int l = 0; l < obs.num_obs; ++l) y[l] = 0.6 * stream.next_normal();

    const LocalisationSpec loc{0.08, LocKind::GaspariCohn};
    Eigen::MatrixXd via_sletpf = particles;
    sletpf_assimilate(via_sletpf, singleton, obs, y, loc);
    const Eigen::MatrixXd reference = otlpf_test::per_node_local_etpf(particles, obs, y, loc);
    worst_per_node =
        std::max(worst_per_node, (via_sletpf - reference).cwiseAbs().maxCoeff());

    const LocalisationSpec uniform{0.2, LocKind::Uniform};
    Eigen::MatrixXd via_whole = particles;
    sletpf_assimilate(via_whole, whole, obs, y, uniform);
    const auto weights =
        compute_local_weights(particles, obs, y, WeightGranularity::Global, uniform);
    Eigen::MatrixXd via_etpf = particles;
    etpf_assimilate(via_etpf, weights.normalised.row(0).transpose());
    worst_global = std::max(worst_global, (via_whole - via_etpf).cwiseAbs().maxCoeff());
  }
  const bool pass = worst_per_node <= 1e-12 && worst_global <= 1e-12;
  return {pass, format("B=M vs per-node reference max diff %.2e, B=1 vs global ETPF "
                       "max diff %.2e (both <=1e-12)",
                       worst_per_node, worst_global)};
}

// ---------------------------------------------------------------------------
// Criterion 5: node-wise mean preservation
// ---------------------------------------------------------------------------

Outcome criterion_mean_preservation() {
  StParams params;
  params.state_dim = 64;
  params.num_obs = 8;
  const StochasticTurbulenceModel model(params);
  const ObservationModel& obs = model.observation();
  const PeriodicMesh mesh(params.state_dim);
  const LocalisationSpec loc{0.05, LocKind::GaspariCohn};

  const std::vector<int> patch_options{4, 8, 16, 32, 64};
  const std::vector<double> width_options{1.0 / 64, 1.0 / 32, 1.0 / 16};
  RngStream stream(5050);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int b_count = patch_options[trial % patch_options.size()];
    const double w = width_options[trial % width_options.size()];
    const PartitionOfUnity pou = build_pou(build_equal_partition(mesh, b_count), mesh, w);
    Eigen::MatrixXd particles(6 + trial % 5, params.state_dim);
    model.init_ensemble(particles, 7000 + trial);
    Eigen::VectorXd y(obs.num_obs);
    for (int l = 0; l < obs.num_obs; ++l) y[l] = stream.next_normal();

    const auto weights =
        compute_local_weights(particles, obs, y, WeightGranularity::PerPatch, loc, &pou);
    Eigen::MatrixXd updated = particles;
    sletpf_assimilate(updated, pou, obs, y, loc);
    for (int node = 0; node < params.state_dim; ++node) {
      double want = 0.0;
      for (int b : pou.covering[node]) {
        want += pou.bump(b, node) * weights.normalised.row(b).dot(particles.col(node));
      }
      worst = std::max(worst, std::abs(updated.col(node).mean() - want));
    }

    const auto global =
        compute_local_weights(particles, obs, y, WeightGranularity::Global, loc);
    Eigen::MatrixXd moved = particles;
    etpf_assimilate(moved, global.normalised.row(0).transpose());
    const Eigen::RowVectorXd want_mean = global.normalised.row(0) * particles;
    worst = std::max(worst, (moved.colwise().mean() - want_mean).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, format("100 random configurations, worst node-wise "
                                 "weighted-mean violation %.2e (<=1e-10)",
                                 worst)};
}

// ---------------------------------------------------------------------------
// Criterion 6: Table-2 magnitude at desk scale
// ---------------------------------------------------------------------------

Outcome criterion_table2() {
  const auto& fixture = st_linear_fixture();
  const auto tic = std::chrono::steady_clock::now();

  FilterConfig fc;
  fc.kind = FilterKind::Letkf;
  fc.num_particles = 100;
  // table radii are half-support values; the taper radius here is the support
  fc.loc = {2.0 * 0.030, LocKind::GaspariCohn};
  const auto run_mean = filter_run(*fixture.model, fc, fixture.sim.observations,
                                   filter_seed(fixture.config.seed, 0));
  const double rmse_mean_value = rmse(run_mean.means, fixture.truth.means);

  fc.loc.radius = 2.0 * 0.034;
  const auto run_std = filter_run(*fixture.model, fc, fixture.sim.observations,
                                  filter_seed(fixture.config.seed, 1));
  const double rmse_std_value = rmse(run_std.stds, fixture.truth.stds);

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  const bool pass = rmse_mean_value >= 0.030 && rmse_mean_value <= 0.060 &&
                    rmse_std_value >= 0.010 && rmse_std_value <= 0.020 && elapsed < 600.0;
  return {pass, format("LETKF RMSE(mean)=%.4f at support 0.060 (window [0.030,0.060]), "
                       "RMSE(std)=%.4f at support 0.068 (window [0.010,0.020]), %.0f s",
                       rmse_mean_value, rmse_std_value, elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 7: non-Gaussian advantage of the SLETPF over the LETKF
// ---------------------------------------------------------------------------

Outcome criterion_non_gaussian_advantage() {
  const auto& fixture = st_transformed_fixture();
  const auto tic = std::chrono::steady_clock::now();
  std::stringstream csv;

  ExperimentConfig letkf = fixture.config;
  letkf.filter.kind = FilterKind::Letkf;
  letkf.filter.num_particles = 100;
  letkf.repeats = 2;
  letkf.grid.radii.clear();
  for (double r = 0.010; r <= 0.160 + 1e-12; r += 0.002) letkf.grid.radii.push_back(r);
  const auto letkf_rows = grid_search(letkf, csv, *fixture.model, fixture.sim, &fixture.truth);
  const BestCell letkf_best = best_cell(letkf_rows, &MetricsRecord::rmse_std);

  ExperimentConfig sletpf = fixture.config;
  sletpf.filter.kind = FilterKind::Sletpf;
  sletpf.filter.num_particles = 100;
  sletpf.filter.patch_count = 128;
  sletpf.filter.kernel_width = 1.0 / 256.0;
  sletpf.repeats = 2;
  sletpf.grid.radii.clear();
  for (double r = 0.002; r <= 0.030 + 1e-12; r += 0.002) sletpf.grid.radii.push_back(r);
  const auto sletpf_rows =
      grid_search(sletpf, csv, *fixture.model, fixture.sim, &fixture.truth);
  const BestCell sletpf_best = best_cell(sletpf_rows, &MetricsRecord::rmse_std);

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  const bool pass = sletpf_best.value < letkf_best.value && elapsed < 7200.0;
  return {pass,
          format("best RMSE(std): SLETPF(B=128,w=1/256) %.4f at r=%.3f vs LETKF %.4f at "
                 "r=%.3f over %zu+%zu rows, %.0f s",
                 sletpf_best.value, sletpf_best.radius, letkf_best.value, letkf_best.radius,
                 sletpf_rows.size(), letkf_rows.size(), elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 8: runtime scaling with the number of patches
// ---------------------------------------------------------------------------

Outcome criterion_runtime_scaling() {
  const auto& fixture = st_transformed_fixture();
  std::stringstream csv;

  auto sweep = [&](int patches, double width) {
    ExperimentConfig config = fixture.config;
    config.filter.kind = FilterKind::Sletpf;
    config.filter.num_particles = 100;
    config.filter.patch_count = patches;
    config.filter.kernel_width = width;
    config.repeats = 3;
    config.grid.radii = {0.020, 0.024, 0.028};
    return grid_search(config, csv, *fixture.model, fixture.sim, &fixture.truth);
  };
  const auto coarse_rows = sweep(64, 1.0 / 128.0);
  const auto fine_rows = sweep(512, 1.0 / 512.0);
  const BestCell coarse = best_cell(coarse_rows, &MetricsRecord::rmse_mean);
  const BestCell fine = best_cell(fine_rows, &MetricsRecord::rmse_mean);

  const double time_ratio = coarse.median_assim_seconds / fine.median_assim_seconds;
  const double mean_gap = std::abs(coarse.rmse_mean - fine.rmse_mean) / fine.rmse_mean;
  const bool pass = time_ratio <= 0.4 && mean_gap <= 0.15;
  return {pass, format("median assim time B=64 %.1fs vs B=512 %.1fs (ratio %.3f <= 0.4); "
                       "RMSE(mean) %.4f vs %.4f (gap %.1f%% <= 15%%)",
                       coarse.median_assim_seconds, fine.median_assim_seconds, time_ratio,
                       coarse.rmse_mean, fine.rmse_mean, 100.0 * mean_gap)};
}

// ---------------------------------------------------------------------------
// Criterion 9: smoother partitions of unity improve the smoothness metric
// ---------------------------------------------------------------------------

Outcome criterion_smoothness_benefit() {
  const auto& fixture = st_linear_fixture();
  std::stringstream csv;

  auto sweep = [&](double width) {
    ExperimentConfig config = fixture.config;
    config.filter.kind = FilterKind::Sletpf;
    config.filter.num_particles = 100;
    config.filter.patch_count = 128;
    config.filter.kernel_width = width;
    config.repeats = 2;
    config.grid.radii.clear();
    for (double r = 0.002; r <= 0.030 + 1e-12; r += 0.004) config.grid.radii.push_back(r);
    return grid_search(config, csv, *fixture.model, fixture.sim, &fixture.truth);
  };
  const auto smooth_rows = sweep(1.0 / 128.0);
  const auto hard_rows = sweep(1.0 / 512.0);
  const BestCell smooth = best_cell(smooth_rows, &MetricsRecord::rmse_smoothness);
  const BestCell hard = best_cell(hard_rows, &MetricsRecord::rmse_smoothness);

  const bool pass = smooth.value < hard.value;
  return {pass, format("best RMSE(smoothness) at B=128: w=1/128 %.3f at r=%.3f vs "
                       "w=1/512 %.3f at r=%.3f (strictly lower required)",
                       smooth.value, smooth.radius, hard.value, hard.radius)};
}

// ---------------------------------------------------------------------------
// Criterion 10: Kuramoto-Sivashinsky property suite
// ---------------------------------------------------------------------------

Outcome criterion_ks_suite() {
  // (a) boundedness over the full horizon at the table parameters
  KsParams full;
  const KuramotoSivashinskyModel bounded_model(full);
  const Simulation bounded = bounded_model.simulate_truth(full.num_times, 777);
  const double max_abs = bounded.states.cwiseAbs().maxCoeff();
  const bool bounded_ok = max_abs < 1e3 && bounded.states.allFinite();

  // (b) reduced model: SLETPF against a large bootstrap-PF reference. The
  // length scale shrinks with the mesh so the unstable band stays resolved
  // (theta1 = 32*pi at M = 32 would put the whole band at the aliasing edge
  // and blow up); the noise parameters follow the same scaling relations as
  // the full table (theta3 = 1/theta1, theta4 = theta1^-1/2).
  KsParams reduced;
  reduced.state_dim = 32;
  reduced.num_obs = 4;
  reduced.num_times = 20;
  reduced.theta1 = 8.0 * 3.14159265358979323846;
  reduced.theta3 = 1.0 / reduced.theta1;
  reduced.theta4 = 1.0 / std::sqrt(reduced.theta1);
  const KuramotoSivashinskyModel reduced_model(reduced);
  const Simulation reduced_sim = reduced_model.simulate_truth(20, 4242);
  FilterConfig reference;
  reference.kind = FilterKind::BootstrapPf;
  reference.num_particles = 100000;
  const GroundTruth reference_truth = reference_ensemble_ground_truth(
      reduced_model, reference, reduced_sim.observations, 555);
  FilterConfig sletpf;
  sletpf.kind = FilterKind::Sletpf;
  sletpf.num_particles = 100;
  sletpf.patch_count = 8;
  sletpf.kernel_width = 1.0 / 16.0;
  sletpf.loc = {0.12, LocKind::GaspariCohn};
  const auto reduced_run = filter_run(reduced_model, sletpf, reduced_sim.observations, 808);
  const double reduced_rmse = rmse(reduced_run.means, reference_truth.means);
  const double two_sigma = 2.0 * reduced.obs_noise_std;
  const bool reduced_ok = reduced_rmse <= two_sigma;

  // (c) rank-histogram calibration on the tanh-observed full model
  KsParams tanh_params;
  tanh_params.tanh_observations = true;
  const KuramotoSivashinskyModel tanh_model(tanh_params);
  const Simulation tanh_sim = tanh_model.simulate_truth(tanh_params.num_times, 1234);
  FilterRunOptions options;
  options.truth = &tanh_sim.states;

  FilterConfig letkf;
  letkf.kind = FilterKind::Letkf;
  letkf.num_particles = 100;
  letkf.loc = {2.0 * 0.064, LocKind::GaspariCohn};  // half-support table radius
  const auto letkf_run = filter_run(tanh_model, letkf, tanh_sim.observations, 66, options);

  FilterConfig sletpf_full;
  sletpf_full.kind = FilterKind::Sletpf;
  sletpf_full.num_particles = 100;
  sletpf_full.patch_count = 64;
  sletpf_full.kernel_width = 1.0 / 128.0;
  sletpf_full.loc = {2.0 * 0.022, LocKind::GaspariCohn};
  const auto sletpf_run =
      filter_run(tanh_model, sletpf_full, tanh_sim.observations, 66, options);

  const double chi_letkf = chi_square_uniform(letkf_run.rank_counts);
  const double chi_sletpf = chi_square_uniform(sletpf_run.rank_counts);
  const bool rank_ok = chi_sletpf < chi_letkf;

  const bool pass = bounded_ok && reduced_ok && rank_ok;
  return {pass, format("(a) max|z|=%.1f (<1e3) (b) reduced RMSE(mean)=%.3f vs 2*sigma=%.1f "
                       "(c) rank chi2 SLETPF %.0f < LETKF %.0f",
                       max_abs, reduced_rmse, two_sigma, chi_sletpf, chi_letkf)};
}

// ---------------------------------------------------------------------------
// Criterion 11: thread-count invariance
// ---------------------------------------------------------------------------

Outcome criterion_determinism() {
  struct Case {
    const char* name;
    ExperimentConfig config;
  };
  std::vector<Case> cases;
  {
    ExperimentConfig st;
    st.model = ModelKind::StLinear;
    st.seed = 1337;
    st.st.state_dim = 128;
    st.st.num_times = 10;
    st.st.num_obs = 16;
    st.filter.kind = FilterKind::Sletpf;
    st.filter.num_particles = 50;
    st.filter.patch_count = 32;
    st.filter.kernel_width = 1.0 / 64.0;
    st.filter.loc = {0.05, LocKind::GaspariCohn};
    cases.push_back({"st_linear/sletpf", st});
  }
  {
    ExperimentConfig ks;
    ks.model = ModelKind::KsTanh;
    ks.seed = 7331;
    ks.ks.state_dim = 64;
    ks.ks.num_times = 5;
    ks.ks.num_obs = 8;
    ks.ks.burn_steps = 20;
    ks.filter.kind = FilterKind::Letkf;
    ks.filter.num_particles = 20;
    ks.filter.loc = {0.1, LocKind::GaspariCohn};
    ks.truth_source = TruthSource::None;
    cases.push_back({"ks_tanh/letkf", ks});
  }

  bool pass = true;
  std::string detail;
  for (const auto& test_case : cases) {
    const auto model = make_model(test_case.config);
    const Simulation sim = model->simulate_truth(config_num_times(test_case.config),
                                                 truth_seed(test_case.config.seed));
    std::vector<FilterRunResult> runs;
    for (int threads : {1, 2, 4}) {
      ThreadPool::set_global_threads(threads);
      runs.push_back(filter_run(*model, test_case.config.filter, sim.observations,
                                filter_seed(test_case.config.seed, 0)));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    ThreadPool::set_global_threads(hw == 0 ? 2 : static_cast<int>(hw));
    bool identical = true;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      identical = identical &&
                  (runs[i].means - runs[0].means).cwiseAbs().maxCoeff() == 0.0 &&
                  (runs[i].stds - runs[0].stds).cwiseAbs().maxCoeff() == 0.0 &&
                  (runs[i].smoothness - runs[0].smoothness).cwiseAbs().maxCoeff() == 0.0;
    }
    pass = pass && identical;
    detail += format("%s %s; ", test_case.name, identical ? "bitwise identical" : "DIVERGED");
  }
  return {pass, detail + "threads {1,2,4}"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> criteria = {
      {1, "OT exactness", criterion_ot_exactness},
      {2, "Sinkhorn contract", criterion_sinkhorn},
      {3, "ETKF vs KF", criterion_etkf_vs_kf},
      {4, "reduction identities", criterion_reduction_identities},
      {5, "mean preservation", criterion_mean_preservation},
      {6, "Table 2 magnitude", criterion_table2},
      {7, "non-Gaussian advantage", criterion_non_gaussian_advantage},
      {8, "runtime scaling", criterion_runtime_scaling},
      {9, "smoothness benefit", criterion_smoothness_benefit},
      {10, "KS property suite", criterion_ks_suite},
      {11, "determinism", criterion_determinism},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& entry : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), entry.id) == selected.end()) {
      continue;
    }
    Outcome outcome;
    try {
      outcome = entry.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::printf("criterion %2d (%s): %s - %s\n", entry.id, entry.name,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("[%.0f s total] %s\n", now_seconds(),
              failures == 0 ? "all criteria passed"
                            : format("%d criteria failed", failures).c_str());
  return failures == 0 ? 0 : 1;
}
