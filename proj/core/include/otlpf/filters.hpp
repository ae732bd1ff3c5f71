#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "otlpf/localisation.hpp"
#include "otlpf/models.hpp"
#include "otlpf/ot.hpp"
#include "otlpf/pou.hpp"
#include "otlpf/rng.hpp"

namespace otlpf {

// ---------------------------------------------------------------------------
// Exact Kalman filtering (ground truth for the linear-Gaussian model)
// ---------------------------------------------------------------------------

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// C <- C - C H^T (R + H C H^T)^-1 H C,  m <- m + C H^T R^-1 (y - H m).
// The posterior covariance is symmetrised. Throws if the innovation matrix
// has condition number above 1e14.
GaussianBelief kf_assimilate(const GaussianBelief& prior, const Eigen::MatrixXd& obs_matrix,
                             const Eigen::MatrixXd& obs_cov, const Eigen::VectorXd& y);

struct KalmanResult {
  Eigen::MatrixXd means;  // T x M
  Eigen::MatrixXd stds;   // T x M
  Eigen::VectorXd smoothness;  // T, exact folded-normal expectation
};

using KalmanStepCallback =
    std::function<void(int, const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

// Alternates the exact spectral prediction of the stochastic turbulence model
// with Kalman assimilation updates. The optional callback receives the
// posterior (mean, covariance) at every time index.
KalmanResult kalman_filter_st(const StochasticTurbulenceModel& model,
                              const Eigen::MatrixXd& observations,
                              const KalmanStepCallback& per_step = {});

// E|X| for X ~ N(mu, sigma^2); used for the exact smoothness coefficient of a
// Gaussian belief.
double folded_normal_mean(double mu, double sigma);
double gaussian_smoothness_coefficient(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& cov);

// ---------------------------------------------------------------------------
// Ensemble transform Kalman filters
// ---------------------------------------------------------------------------

// Global ETKF update with the symmetric square-root transform. obs_ensemble
// holds per-particle predicted observations (P x D, no noise added).
void etkf_assimilate(Eigen::MatrixXd& particles, const Eigen::MatrixXd& obs_ensemble,
                     const Eigen::MatrixXd& obs_cov, const Eigen::VectorXd& y);

// Local ETKF: per node, observations are tapered by the square root of the
// localisation weight and the node column is transformed with its own
// square-root coefficient matrix. Nodes with no observation in radius keep
// their predictive values.
void letkf_assimilate(Eigen::MatrixXd& particles, const ObservationModel& obs,
                      const Eigen::VectorXd& y, const LocalisationSpec& loc);

// ---------------------------------------------------------------------------
// Particle weights and resampling
// ---------------------------------------------------------------------------

enum class WeightGranularity { Global, PerNode, PerPatch };

struct LocalWeights {
  WeightGranularity granularity = WeightGranularity::Global;
  Eigen::MatrixXd log_unnormalised;  // units x P
  Eigen::MatrixXd normalised;        // units x P, rows on the simplex
  long degenerate_units = 0;         // units that fell back to uniform
};

// log w[unit][p] = sum_l loc_factor(unit, l) * log g_l(y_l | prediction_pl),
// with loc_factor 1 for Global, l_r(node-obs distance) for PerNode and
// l_r(patch-obs distance) for PerPatch. Rows are normalised by log-sum-exp;
// fully degenerate rows fall back to uniform and are counted.
LocalWeights compute_local_weights(const Eigen::MatrixXd& particles,
                                   const ObservationModel& obs, const Eigen::VectorXd& y,
                                   WeightGranularity granularity,
                                   const LocalisationSpec& loc,
                                   const PartitionOfUnity* pou = nullptr);

std::vector<int> resample_multinomial(const Eigen::VectorXd& weights, RngStream& stream);
std::vector<int> resample_systematic(const Eigen::VectorXd& weights, RngStream& stream);

// Independent multinomial draw per mesh node; diagnostic baseline only.
std::vector<std::vector<int>> resample_local_independent(const Eigen::MatrixXd& node_weights,
                                                         RngStream& stream);

// ---------------------------------------------------------------------------
// Ensemble transform particle filters
// ---------------------------------------------------------------------------

struct OtMethod {
  OtSolverKind kind = OtSolverKind::Exact;
  double lambda = 1e-2;
  SinkhornOptions sinkhorn;
};

// Global ETPF update: squared Euclidean costs over all mesh nodes, exact OT
// plan, particles replaced by plan * particles.
void etpf_assimilate(Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                     const OtMethod& ot = {});

struct SletpfStats {
  long degenerate_weight_units = 0;
  long identity_fast_path = 0;  // patches with exactly uniform weights
  // When set, receives the dense per-patch transport plans (debugging hook).
  std::vector<Eigen::MatrixXd>* capture_plans = nullptr;
};

// Smooth local ETPF update: per-patch weights, per-patch transport costs over
// the subsampled support nodes, one OT solve per patch, and the partition of
// unity interpolating the per-patch maps across nodes.
void sletpf_assimilate(Eigen::MatrixXd& particles, const PartitionOfUnity& pou,
                       const ObservationModel& obs, const Eigen::VectorXd& y,
                       const LocalisationSpec& loc, const OtMethod& ot = {},
                       SletpfStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Filter driver
// ---------------------------------------------------------------------------

enum class FilterKind { Letkf, Etpf, Sletpf, BootstrapPf };
enum class ResampleKind { Multinomial, Systematic };

struct FilterConfig {
  FilterKind kind = FilterKind::Sletpf;
  int num_particles = 100;
  LocalisationSpec loc{0.03, LocKind::GaspariCohn};
  int patch_count = 128;
  double kernel_width = 1.0 / 256.0;
  SubsampleMode subsample = SubsampleMode::Auto;
  OtMethod ot;
  ResampleKind resample = ResampleKind::Systematic;
  double inflation = 1.0;  // multiplicative anomaly inflation; 1 = off
};

struct FilterRunOptions {
  const Eigen::MatrixXd* truth = nullptr;  // enables rank-histogram counting
  bool keep_ensembles = false;
};

struct FilterRunResult {
  Eigen::MatrixXd means;       // T x M, post-assimilation ensemble means
  Eigen::MatrixXd stds;        // T x M, 1/P convention
  Eigen::VectorXd smoothness;  // T
  double assimilation_seconds = 0.0;
  double median_n_eff = 0.0;
  long degenerate_weight_events = 0;
  std::vector<long> rank_counts;             // P+1 bins when truth was given
  std::vector<Eigen::MatrixXd> ensembles;    // when keep_ensembles
};

// Alternates prediction (model forward; the initial draw at t = 0) with the
// configured assimilation update. Deterministic for a fixed seed regardless
// of worker count; assimilation time excludes the forward integration.
FilterRunResult filter_run(const ForwardModel& model, const FilterConfig& config,
                           const Eigen::MatrixXd& observations, std::uint64_t seed,
                           const FilterRunOptions& options = {});

}  // namespace otlpf
