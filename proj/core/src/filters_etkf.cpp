#include <Eigen/Dense>
#include <cmath>

#include "otlpf/filters.hpp"
#include "otlpf/mesh.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {

constexpr double kEigClamp = 1e-12;

// Symmetric square root S = (I + W W^T)^(-1/2) and its square, applied via
// the eigensystem of the smaller of W^T W (dual) or I + W W^T (primal).
// Basic identity: with W = U sqrt(beta) V^T, the spectrum of I + W W^T is
// 1 + beta on span(U) and 1 elsewhere, so
//   S   = I + U ((1+beta)^(-1/2) - 1) U^T,
//   S^2 = I + U ((1+beta)^(-1)   - 1) U^T.
class SqrtTransform {
 public:
  explicit SqrtTransform(const Eigen::MatrixXd& w) {
    const int p = static_cast<int>(w.rows());
    const int d = static_cast<int>(w.cols());
    if (d < p) {
      Eigen::MatrixXd gram = w.transpose() * w;  // d x d
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
      const Eigen::VectorXd& beta = eig.eigenvalues();
      int kept = 0;
      for (int i = 0; i < d; ++i) {
        if (beta[i] > kEigClamp) ++kept;
      }
      basis_.resize(p, kept);
      s_scale_.resize(kept);
      s2_scale_.resize(kept);
      int j = 0;
      for (int i = 0; i < d; ++i) {
        if (beta[i] <= kEigClamp) continue;
        basis_.col(j) = w * eig.eigenvectors().col(i) / std::sqrt(beta[i]);
        s_scale_[j] = 1.0 / std::sqrt(1.0 + beta[i]) - 1.0;
        s2_scale_[j] = 1.0 / (1.0 + beta[i]) - 1.0;
        ++j;
      }
    } else {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(p, p) + w * w.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
      basis_ = eig.eigenvectors();
      const Eigen::VectorXd gamma = eig.eigenvalues().cwiseMax(kEigClamp);
      s_scale_ = gamma.cwiseSqrt().cwiseInverse().array() - 1.0;
      s2_scale_ = gamma.cwiseInverse().array() - 1.0;
    }
  }

  // S * x and S^2 * x for vector or matrix arguments.
  template <typename Derived>
  Eigen::MatrixXd apply_s(const Eigen::MatrixBase<Derived>& x) const {
    if (basis_.cols() == 0) return x;
    return x + basis_ * (s_scale_.asDiagonal() * (basis_.transpose() * x));
  }
  template <typename Derived>
  Eigen::MatrixXd apply_s2(const Eigen::MatrixBase<Derived>& x) const {
    if (basis_.cols() == 0) return x;
    return x + basis_ * (s2_scale_.asDiagonal() * (basis_.transpose() * x));
  }

 private:
  Eigen::MatrixXd basis_;     // orthonormal columns
  Eigen::VectorXd s_scale_;   // (1+beta)^(-1/2) - 1
  Eigen::VectorXd s2_scale_;  // (1+beta)^(-1)   - 1
};

}  // namespace

void etkf_assimilate(Eigen::MatrixXd& particles, const Eigen::MatrixXd& obs_ensemble,
                     const Eigen::MatrixXd& obs_cov, const Eigen::VectorXd& y) {
  const int p = static_cast<int>(particles.rows());
  const int d = static_cast<int>(obs_ensemble.cols());
  if (p < 2) throw std::invalid_argument("etkf_assimilate: need at least two particles");
  if (obs_ensemble.rows() != p || obs_cov.rows() != d || obs_cov.cols() != d ||
      y.size() != d) {
    throw std::invalid_argument("etkf_assimilate: shape mismatch");
  }
  if (!particles.allFinite() || !obs_ensemble.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("etkf_assimilate: non-finite input");
  }

  const double norm = std::sqrt(static_cast<double>(p - 1));
  const Eigen::RowVectorXd y_mean = obs_ensemble.colwise().mean();
  Eigen::MatrixXd y_anom = (obs_ensemble.rowwise() - y_mean) / norm;  // P x D

  // W = Delta Y R^(-1/2) so that Delta Y R^-1 Y^T Delta = W W^T.
  Eigen::LLT<Eigen::MatrixXd> llt(obs_cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("etkf_assimilate: observation covariance not SPD");
  }
  const Eigen::MatrixXd w =
      llt.matrixL().solve(y_anom.transpose()).transpose();      // P x D
  const Eigen::VectorXd d_scaled =
      llt.matrixL().solve(y - y_mean.transpose());               // D

  SqrtTransform transform(w);
  const Eigen::VectorXd v = w * d_scaled;                        // P

  const Eigen::RowVectorXd x_mean = particles.colwise().mean();
  Eigen::MatrixXd x_anom = (particles.rowwise() - x_mean) / norm;  // P x M

  const Eigen::RowVectorXd shift = transform.apply_s2(v).transpose() * x_anom;
  particles = (norm * transform.apply_s(x_anom)).rowwise() + (x_mean + shift);
}

void letkf_assimilate(Eigen::MatrixXd& particles, const ObservationModel& obs,
                      const Eigen::VectorXd& y, const LocalisationSpec& loc) {
  const int p = static_cast<int>(particles.rows());
  const int m = static_cast<int>(particles.cols());
  if (p < 2) throw std::invalid_argument("letkf_assimilate: need at least two particles");
  if (y.size() != obs.num_obs) throw std::invalid_argument("letkf_assimilate: shape mismatch");
  const PeriodicMesh mesh(m);

  const double norm = std::sqrt(static_cast<double>(p - 1));
  const Eigen::MatrixXd predicted = obs.predict_ensemble(particles);
  const Eigen::RowVectorXd y_mean = predicted.colwise().mean();
  const Eigen::MatrixXd y_anom = (predicted.rowwise() - y_mean) / norm;  // P x L

  const Eigen::RowVectorXd x_mean = particles.colwise().mean();

  Eigen::MatrixXd updated = particles;
  ThreadPool::global().parallel_for(0, m, [&](int node) {
    // Local observation set and square-root taper.
    std::vector<int> local;
    std::vector<double> taper;
    for (int l = 0; l < obs.num_obs; ++l) {
      const double weight =
          loc_weight(loc, periodic_distance(mesh.position(node), obs.locations[l]));
      if (weight > 0.0) {
        local.push_back(l);
        taper.push_back(std::sqrt(weight) / obs.noise_std);
      }
    }
    if (local.empty()) return;  // no information in radius: keep predictive values

    const int d = static_cast<int>(local.size());
    Eigen::MatrixXd w(p, d);
    Eigen::VectorXd d_scaled(d);
    for (int j = 0; j < d; ++j) {
      const int l = local[j];
      w.col(j) = y_anom.col(l) * taper[j];
      d_scaled[j] = (y[l] - y_mean[l]) * taper[j];
    }
    SqrtTransform transform(w);
    const Eigen::VectorXd v = w * d_scaled;

    const Eigen::VectorXd x_anom =
        (particles.col(node).array() - x_mean[node]).matrix() / norm;
    const double shift = transform.apply_s2(v).col(0).dot(x_anom);
    updated.col(node) =
        (norm * transform.apply_s(x_anom)).array() + (x_mean[node] + shift);
  });
  particles.swap(updated);
}

}  // namespace otlpf
