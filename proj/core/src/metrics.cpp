#include <Eigen/Dense>
#include <cmath>

#include "otlpf/metrics.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

std::pair<Eigen::VectorXd, Eigen::VectorXd> ensemble_stats(const Eigen::MatrixXd& particles) {
  const int p = static_cast<int>(particles.rows());
  if (p < 2) throw std::invalid_argument("ensemble_stats: need at least two particles");
  Eigen::VectorXd mean = particles.colwise().mean().transpose();
  Eigen::VectorXd var =
      (particles.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() /
      p;
  return {std::move(mean), var.cwiseMax(0.0).cwiseSqrt()};
}

double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw std::invalid_argument("rmse: shape mismatch");
  }
  return std::sqrt((estimate - truth).array().square().mean());
}

double rmse_series(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("rmse_series: shape mismatch");
  return std::sqrt((estimate - truth).array().square().mean());
}

double field_smoothness(const Eigen::VectorXd& field) {
  const int m = static_cast<int>(field.size());
  if (m < 2) throw std::invalid_argument("field_smoothness: need at least two nodes");
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += std::abs(field[i] - field[(i + 1) % m]);
  return total;
}

double smoothness_coefficient(const Eigen::MatrixXd& particles) {
  const int p = static_cast<int>(particles.rows());
  const int m = static_cast<int>(particles.cols());
  if (m < 2) throw std::invalid_argument("smoothness_coefficient: need at least two nodes");
  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < m; ++j) {
      total += std::abs(particles(i, j) - particles(i, (j + 1) % m));
    }
  }
  return total / p;
}

GroundTruth kalman_ground_truth(const StochasticTurbulenceModel& model,
                                const Eigen::MatrixXd& observations) {
  const KalmanResult kf = kalman_filter_st(model, observations);
  GroundTruth truth;
  truth.source = GroundTruth::Source::KalmanExact;
  truth.means = kf.means;
  truth.stds = kf.stds;
  truth.smoothness = kf.smoothness;
  return truth;
}

namespace {

// PSD square-root factor: Cholesky with a small diagonal jitter, falling back
// to the eigendecomposition square root if the factorisation fails.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  const int m = static_cast<int>(cov.rows());
  const double jitter = 1e-12 * std::max(1.0, cov.trace() / m);
  Eigen::MatrixXd shifted = cov;
  shifted.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("pushforward_ground_truth: covariance factorisation failed");
  }
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

GroundTruth pushforward_ground_truth(const StochasticTurbulenceModel& model,
                                     const Eigen::MatrixXd& observations,
                                     const TransformSpec& transform, int num_samples,
                                     std::uint64_t seed) {
  if (num_samples < 2) {
    throw std::invalid_argument("pushforward_ground_truth: need at least two samples");
  }
  const int m = model.state_dim();
  const int num_times = static_cast<int>(observations.rows());

  GroundTruth truth;
  truth.source = GroundTruth::Source::PushforwardMc;
  truth.means.resize(num_times, m);
  truth.stds.resize(num_times, m);
  truth.smoothness.resize(num_times);

  // Fixed chunk decomposition keeps the reduction order independent of the
  // worker count.
  constexpr int kChunks = 16;
  kalman_filter_st(model, observations,
                   [&](int t, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::MatrixXd factor = covariance_factor(cov);
    std::vector<Eigen::VectorXd> sum(kChunks, Eigen::VectorXd::Zero(m));
    std::vector<Eigen::VectorXd> sum_sq(kChunks, Eigen::VectorXd::Zero(m));
    std::vector<double> sum_gamma(kChunks, 0.0);
    ThreadPool::global().parallel_for(0, kChunks, [&](int chunk) {
      const int begin = static_cast<int>(static_cast<long>(num_samples) * chunk / kChunks);
      const int end = static_cast<int>(static_cast<long>(num_samples) * (chunk + 1) / kChunks);
      RngStream stream = make_stream(seed, StreamDomain::GroundTruth,
                                     static_cast<std::uint64_t>(t), chunk);
      Eigen::VectorXd z(m), sample(m);
      for (int s = begin; s < end; ++s) {
        for (int i = 0; i < m; ++i) z[i] = stream.next_normal();
        sample.noalias() = factor * z;
        sample += mean;
        for (int i = 0; i < m; ++i) sample[i] = transform_apply(transform, sample[i]);
        sum[chunk] += sample;
        sum_sq[chunk] += sample.cwiseProduct(sample);
        sum_gamma[chunk] += field_smoothness(sample);
      }
    });
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd total_sq = Eigen::VectorXd::Zero(m);
    double total_gamma = 0.0;
    for (int chunk = 0; chunk < kChunks; ++chunk) {
      total += sum[chunk];
      total_sq += sum_sq[chunk];
      total_gamma += sum_gamma[chunk];
    }
    const Eigen::VectorXd mc_mean = total / num_samples;
    const Eigen::VectorXd mc_var =
        (total_sq / num_samples - mc_mean.cwiseProduct(mc_mean)).cwiseMax(0.0);
    truth.means.row(t) = mc_mean.transpose();
    truth.stds.row(t) = mc_var.cwiseSqrt().transpose();
    truth.smoothness[t] = total_gamma / num_samples;
  });
  return truth;
}

GroundTruth reference_ensemble_ground_truth(const ForwardModel& model,
                                            const FilterConfig& reference_config,
                                            const Eigen::MatrixXd& observations,
                                            std::uint64_t seed) {
  const FilterRunResult run = filter_run(model, reference_config, observations, seed);
  GroundTruth truth;
  truth.source = GroundTruth::Source::ReferenceEnsemble;
  truth.means = run.means;
  truth.stds = run.stds;
  truth.smoothness = run.smoothness;
  return truth;
}

void accumulate_ranks(const Eigen::MatrixXd& ensemble, const Eigen::RowVectorXd& truth_row,
                      std::vector<long>& counts) {
  const int p = static_cast<int>(ensemble.rows());
  const int m = static_cast<int>(ensemble.cols());
  if (static_cast<int>(counts.size()) != p + 1) counts.assign(p + 1, 0);
  for (int node = 0; node < m; ++node) {
    const double truth = truth_row[node];
    int rank = 0;
    for (int i = 0; i < p; ++i) {
      if (ensemble(i, node) < truth) ++rank;  // ties count as not-below
    }
    ++counts[rank];
  }
}

std::vector<long> rank_histogram(const std::vector<Eigen::MatrixXd>& ensembles,
                                 const Eigen::MatrixXd& truth) {
  if (ensembles.empty()) throw std::invalid_argument("rank_histogram: no ensembles");
  std::vector<long> counts(static_cast<std::size_t>(ensembles[0].rows()) + 1, 0);
  for (std::size_t t = 0; t < ensembles.size(); ++t) {
    accumulate_ranks(ensembles[t], truth.row(static_cast<int>(t)), counts);
  }
  return counts;
}

double chi_square_uniform(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  if (total == 0 || counts.empty()) return 0.0;
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0.0;
  for (long c : counts) {
    const double diff = c - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace otlpf
