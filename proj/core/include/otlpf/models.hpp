#pragma once

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "otlpf/fft.hpp"
#include "otlpf/rng.hpp"

namespace otlpf {

// P x M ensemble of state values at mesh nodes, one row per particle.
struct StateEnsemble {
  Eigen::MatrixXd particles;
  int time_index = 0;
};

class ModelBlowUpError : public std::runtime_error {
 public:
  ModelBlowUpError(const std::string& what, int time_index)
      : std::runtime_error(what), time_index(time_index) {}
  int time_index;
};

// ---------------------------------------------------------------------------
// Observations: L pointwise readings of the state field at equispaced mesh
// nodes, y_l = map(x at node) + Gaussian noise.
// ---------------------------------------------------------------------------

enum class ObsMap { Identity, Tanh, ScaledSinh };

struct ObservationModel {
  int state_dim = 0;
  int num_obs = 0;
  double noise_std = 0.5;
  ObsMap map = ObsMap::Identity;
  double map_scale = 1.0;  // ScaledSinh: predicted = sinh(x) / map_scale

  std::vector<int> node_index;     // observed node per location, zero based
  std::vector<double> locations;   // positions on [0, 1)

  // Observation l sits at node (M/L)(l - 1/2) in one-based indexing, which
  // must be an integer; this requires M divisible by 2L.
  static ObservationModel equispaced(int state_dim, int num_obs, double noise_std,
                                     ObsMap map, double map_scale = 1.0);

  double predict(double state_value) const;
  double log_density(double y, double predicted) const;

  // Per-particle predicted observations (no noise), P x L.
  Eigen::MatrixXd predict_ensemble(const Eigen::MatrixXd& particles) const;
};

// ---------------------------------------------------------------------------
// Forward models
// ---------------------------------------------------------------------------

struct Simulation {
  Eigen::MatrixXd states;        // T x M
  Eigen::MatrixXd observations;  // T x L
};

class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual int state_dim() const = 0;
  virtual const ObservationModel& observation() const = 0;

  // Draws P independent particles from the initial state distribution.
  // Streams are keyed on (seed, particle), so results do not depend on
  // scheduling.
  virtual void init_ensemble(Eigen::MatrixXd& particles, std::uint64_t seed) const = 0;

  // Advances every particle one observation interval; noise streams are keyed
  // on (seed, time_index, particle).
  virtual void forward(Eigen::MatrixXd& particles, int time_index,
                       std::uint64_t seed) const = 0;

  // One trajectory from the initial distribution plus noisy observations.
  virtual Simulation simulate_truth(int num_times, std::uint64_t seed) const;
};

// ---------------------------------------------------------------------------
// Stochastic turbulence model: linear SPDE with analytic spectral transitions.
// ---------------------------------------------------------------------------

struct StParams {
  int state_dim = 512;      // M
  int num_times = 200;      // T
  int num_obs = 64;         // L
  double delta = 2.5;       // inter-observation time step
  double theta1 = 4e-5;     // diffusion
  double theta2 = 0.1;      // advection
  double theta3 = 0.1;      // damping
  double theta4 = 5.0;      // transform scale for the transformed variant
  double kernel_length = 4e-3;   // state noise kernel length scale
  double kernel_amp = 0.1;       // state noise kernel amplitude
  double obs_noise_std = 0.5;
};

// Spectral coefficient tables, k = 0..floor(M/2):
//   psi_k    = theta1*omega_k^2 + theta3            (omega_k = 2*pi*k)
//   xi_k     = i*theta2*omega_k - psi_k             (real -psi_k at Nyquist)
//   lambda_k = kernel_amp * exp(-omega_k^2 * kernel_length^2)
//   a_k      = lambda_k / sqrt(2*psi_k)
//   b_k      = exp(xi_k * delta)
//   c_k      = a_k * sqrt(1 - exp(-2*psi_k*delta))
struct StSpectralTables {
  Eigen::VectorXd psi;
  Eigen::VectorXd lambda_tilde;
  Eigen::VectorXd a;
  Eigen::VectorXcd b;
  Eigen::VectorXd c;
};

StSpectralTables st_spectral_tables(const StParams& params);

class StochasticTurbulenceModel : public ForwardModel {
 public:
  explicit StochasticTurbulenceModel(const StParams& params);

  int state_dim() const override { return params_.state_dim; }
  const ObservationModel& observation() const override { return obs_; }
  const StParams& params() const { return params_; }
  const StSpectralTables& tables() const { return tables_; }
  const RealDft& dft() const { return dft_; }

  void init_ensemble(Eigen::MatrixXd& particles, std::uint64_t seed) const override;
  void forward(Eigen::MatrixXd& particles, int time_index,
               std::uint64_t seed) const override;

  // Exact linear-Gaussian structure, used by the Kalman filter.
  Eigen::VectorXd apply_transition_mean(const Eigen::VectorXd& state) const;
  // F C F^T for the transition map F, applied spectrally.
  Eigen::MatrixXd propagate_covariance(const Eigen::MatrixXd& cov) const;
  Eigen::MatrixXd process_noise_covariance() const;  // circulant, from c_k
  Eigen::MatrixXd stationary_covariance() const;     // circulant, from a_k^2
  // Node-space stationary variance (same at every node).
  double stationary_variance() const;

 private:
  StParams params_;
  StSpectralTables tables_;
  RealDft dft_;
  ObservationModel obs_;
};

// ---------------------------------------------------------------------------
// Damped stochastic Kuramoto-Sivashinsky model, ETDRK4 + Euler-Maruyama.
// ---------------------------------------------------------------------------

struct KsParams {
  int state_dim = 512;    // M
  int num_times = 200;    // T
  int num_obs = 64;       // L
  int steps_per_obs = 10; // S
  double delta = 0.25;    // integrator step
  double theta1 = 32.0 * 3.14159265358979323846;  // length scale
  double theta2 = 1.0 / 6.0;                      // damping
  double theta3 = 1.0 / (32.0 * 3.14159265358979323846);      // noise length
  double theta4 = 1.0 / std::sqrt(32.0 * 3.14159265358979323846);  // noise amp
  double obs_noise_std = 0.5;
  bool tanh_observations = false;
  // Integrator steps drawn while spinning the initial condition onto the
  // attractor; part of the initial-distribution definition.
  int burn_steps = 100;
  // Disables the quadratic drift term; integration test hook.
  bool nonlinear_term = true;
};

struct KsTables {
  Eigen::VectorXd linear_symbol;  // L_k = omega^2/theta1^2 - omega^4/theta1^4 - theta2
  Eigen::VectorXd e_full, e_half; // exp(L h), exp(L h/2)
  Eigen::VectorXd q, f1, f2, f3;  // ETDRK4 contour-averaged coefficients
  Eigen::VectorXd lambda_tilde;   // noise kernel spectrum
  Eigen::VectorXd noise_scale;    // lambda_tilde * sqrt(delta)
};

KsTables ks_spectral_tables(const KsParams& params);

class KuramotoSivashinskyModel : public ForwardModel {
 public:
  explicit KuramotoSivashinskyModel(const KsParams& params);

  int state_dim() const override { return params_.state_dim; }
  const ObservationModel& observation() const override { return obs_; }
  const KsParams& params() const { return params_; }
  const KsTables& tables() const { return tables_; }
  const RealDft& dft() const { return dft_; }

  void init_ensemble(Eigen::MatrixXd& particles, std::uint64_t seed) const override;
  void forward(Eigen::MatrixXd& particles, int time_index,
               std::uint64_t seed) const override;

  // Drift in spectral space: L_k x_k + N_k(x), with N the dealiasing-free
  // pseudospectral quadratic term and N = 0 at the Nyquist mode.
  void drift(const std::vector<std::complex<double>>& spectral,
             std::vector<std::complex<double>>& out, RealDft::Workspace& ws) const;

 private:
  struct StepScratch;
  void etdrk4_step(std::vector<std::complex<double>>& u, StepScratch& scratch) const;
  void nonlinear(const std::vector<std::complex<double>>& u,
                 std::vector<std::complex<double>>& out, RealDft::Workspace& ws,
                 std::vector<double>& field) const;

  KsParams params_;
  KsTables tables_;
  RealDft dft_;
  ObservationModel obs_;
};

// ---------------------------------------------------------------------------
// Transformed state-space model: conjugates a base model with the elementwise
// diffeomorphism T(x) = asinh(scale * x).
// ---------------------------------------------------------------------------

struct TransformSpec {
  double scale = 5.0;
};

inline double transform_apply(const TransformSpec& t, double x) {
  return std::asinh(t.scale * x);
}

inline double transform_invert(const TransformSpec& t, double y) {
  if (std::abs(y) > 700.0) {
    throw std::domain_error("transform_invert: sinh overflow");
  }
  return std::sinh(y) / t.scale;
}

class TransformedModel : public ForwardModel {
 public:
  TransformedModel(std::shared_ptr<const ForwardModel> base, TransformSpec spec);

  int state_dim() const override { return base_->state_dim(); }
  const ObservationModel& observation() const override { return obs_; }
  const TransformSpec& transform() const { return spec_; }
  const ForwardModel& base() const { return *base_; }

  void init_ensemble(Eigen::MatrixXd& particles, std::uint64_t seed) const override;
  void forward(Eigen::MatrixXd& particles, int time_index,
               std::uint64_t seed) const override;

  // Observations are generated from the base trajectory, so a shared seed
  // yields bit-identical observation sequences for base and transformed runs.
  Simulation simulate_truth(int num_times, std::uint64_t seed) const override;

 private:
  std::shared_ptr<const ForwardModel> base_;
  TransformSpec spec_;
  ObservationModel obs_;
};

}  // namespace otlpf
