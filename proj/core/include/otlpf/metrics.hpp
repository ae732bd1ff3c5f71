#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "otlpf/filters.hpp"
#include "otlpf/models.hpp"

namespace otlpf {

// Equal-weight ensemble mean and standard deviation per node. The standard
// deviation uses the 1/P convention of the empirical-measure estimators.
std::pair<Eigen::VectorXd, Eigen::VectorXd> ensemble_stats(const Eigen::MatrixXd& particles);

// sqrt of the space-time mean of squared differences; shapes must match.
double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);
double rmse_series(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

// Periodic total-variation proxy for spatial smoothness: sum over nodes of
// |x_m - x_{m+1 mod M}|, averaged over particles for an ensemble.
double field_smoothness(const Eigen::VectorXd& field);
double smoothness_coefficient(const Eigen::MatrixXd& particles);

// ---------------------------------------------------------------------------
// Ground truth for the filtering-distribution metrics
// ---------------------------------------------------------------------------

struct GroundTruth {
  enum class Source { KalmanExact, PushforwardMc, ReferenceEnsemble };
  Source source = Source::KalmanExact;
  Eigen::MatrixXd means;       // T x M
  Eigen::MatrixXd stds;        // T x M
  Eigen::VectorXd smoothness;  // T
};

// Exact Gaussian filtering marginals of the linear-Gaussian ST model; the
// smoothness coefficient is the closed-form folded-normal expectation.
GroundTruth kalman_ground_truth(const StochasticTurbulenceModel& model,
                                const Eigen::MatrixXd& observations);

// Monte Carlo pushforward: per time index, num_samples draws from the exact
// Gaussian filtering distribution mapped through T(x) = asinh(scale x).
// Monte Carlo error is O(num_samples^-1/2).
GroundTruth pushforward_ground_truth(const StochasticTurbulenceModel& model,
                                     const Eigen::MatrixXd& observations,
                                     const TransformSpec& transform, int num_samples,
                                     std::uint64_t seed);

// Large-ensemble reference filter (typically a bootstrap PF) standing in for
// an exact solution on models without tractable ground truth.
GroundTruth reference_ensemble_ground_truth(const ForwardModel& model,
                                            const FilterConfig& reference_config,
                                            const Eigen::MatrixXd& observations,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rank histograms
// ---------------------------------------------------------------------------

// rank = number of ensemble members strictly below the true value; one count
// per (time, node) pair, P+1 bins.
void accumulate_ranks(const Eigen::MatrixXd& ensemble, const Eigen::RowVectorXd& truth_row,
                      std::vector<long>& counts);
std::vector<long> rank_histogram(const std::vector<Eigen::MatrixXd>& ensembles,
                                 const Eigen::MatrixXd& truth);

// Chi-square statistic of bin counts against the uniform histogram.
double chi_square_uniform(const std::vector<long>& counts);

// ---------------------------------------------------------------------------
// Per-run record used by the harness CSV
// ---------------------------------------------------------------------------

struct MetricsRecord {
  double rmse_mean = std::numeric_limits<double>::quiet_NaN();
  double rmse_std = std::numeric_limits<double>::quiet_NaN();
  double rmse_smoothness = std::numeric_limits<double>::quiet_NaN();
  double median_n_eff = 0.0;
  double assimilation_seconds = 0.0;
  // config echo
  int patch_count = 0;
  double kernel_width = 0.0;
  double radius = 0.0;
  int num_particles = 0;
  std::uint64_t seed = 0;
  int repeat = 0;
  std::string error;
};

}  // namespace otlpf
