#include <Eigen/Dense>
#include <cmath>

#include "otlpf/filters.hpp"

namespace otlpf {

GaussianBelief kf_assimilate(const GaussianBelief& prior, const Eigen::MatrixXd& obs_matrix,
                             const Eigen::MatrixXd& obs_cov, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd ch_t = prior.cov * obs_matrix.transpose();
  Eigen::MatrixXd innovation_cov = obs_cov + obs_matrix * ch_t;
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(innovation_cov);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(min_ev > 0.0) || max_ev / min_ev > 1e14) {
    throw std::runtime_error("kf_assimilate: singular innovation matrix");
  }
  const Eigen::MatrixXd innovation_inv =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();

  GaussianBelief post;
  post.cov = prior.cov - ch_t * innovation_inv * ch_t.transpose();
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  const Eigen::VectorXd residual = y - obs_matrix * prior.mean;
  post.mean = prior.mean + post.cov * obs_matrix.transpose() *
                               obs_cov.llt().solve(residual);
  return post;
}

double folded_normal_mean(double mu, double sigma) {
  if (sigma <= 0.0) return std::abs(mu);
  constexpr double kSqrtTwoOverPi = 0.79788456080286535587989211986876;
  const double z = mu / sigma;
  return sigma * kSqrtTwoOverPi * std::exp(-0.5 * z * z) +
         mu * std::erf(z / std::sqrt(2.0));
}

double gaussian_smoothness_coefficient(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& cov) {
  const int m = static_cast<int>(mean.size());
  double gamma = 0.0;
  for (int i = 0; i < m; ++i) {
    const int j = (i + 1) % m;
    const double mu = mean[i] - mean[j];
    const double var = cov(i, i) + cov(j, j) - 2.0 * cov(i, j);
    gamma += folded_normal_mean(mu, std::sqrt(std::max(var, 0.0)));
  }
  return gamma;
}

KalmanResult kalman_filter_st(const StochasticTurbulenceModel& model,
                              const Eigen::MatrixXd& observations,
                              const KalmanStepCallback& per_step) {
  const int m = model.state_dim();
  const int num_times = static_cast<int>(observations.rows());
  const ObservationModel& obs = model.observation();
  if (observations.cols() != obs.num_obs) {
    throw std::invalid_argument("kalman_filter_st: observation shape mismatch");
  }
  if (obs.map != ObsMap::Identity) {
    throw std::invalid_argument("kalman_filter_st: linear observations required");
  }

  Eigen::MatrixXd obs_matrix = Eigen::MatrixXd::Zero(obs.num_obs, m);
  for (int l = 0; l < obs.num_obs; ++l) obs_matrix(l, obs.node_index[l]) = 1.0;
  const Eigen::MatrixXd obs_cov =
      obs.noise_std * obs.noise_std * Eigen::MatrixXd::Identity(obs.num_obs, obs.num_obs);
  const Eigen::MatrixXd process_noise = model.process_noise_covariance();

  GaussianBelief belief;
  belief.mean = Eigen::VectorXd::Zero(m);
  belief.cov = model.stationary_covariance();

  KalmanResult result;
  result.means.resize(num_times, m);
  result.stds.resize(num_times, m);
  result.smoothness.resize(num_times);

  for (int t = 0; t < num_times; ++t) {
    if (t > 0) {
      belief.mean = model.apply_transition_mean(belief.mean);
      belief.cov = model.propagate_covariance(belief.cov) + process_noise;
    }
    belief = kf_assimilate(belief, obs_matrix, obs_cov, observations.row(t).transpose());
    result.means.row(t) = belief.mean.transpose();
    result.stds.row(t) = belief.cov.diagonal().cwiseMax(0.0).cwiseSqrt().transpose();
    result.smoothness[t] = gaussian_smoothness_coefficient(belief.mean, belief.cov);
    if (per_step) per_step(t, belief.mean, belief.cov);
  }
  return result;
}

}  // namespace otlpf
