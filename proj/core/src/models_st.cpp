#include <cmath>
#include <complex>

#include "otlpf/models.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Draws the spectral state-noise vector: real standard normal at the zero and
// (even M) Nyquist modes, standard complex normal elsewhere. Draw order is
// part of the reproducibility contract.
void draw_spectral_noise(RngStream& stream, int state_dim,
                         std::vector<std::complex<double>>& out) {
  const int num_modes = state_dim / 2 + 1;
  out.resize(num_modes);
  out[0] = {stream.next_normal(), 0.0};
  const bool even = state_dim % 2 == 0;
  const int last_complex = even ? num_modes - 2 : num_modes - 1;
  for (int k = 1; k <= last_complex; ++k) out[k] = stream.next_complex_normal();
  if (even) out[num_modes - 1] = {stream.next_normal(), 0.0};
}

// Circulant covariance from a per-mode variance spectrum: the first row is
// the inverse real DFT of the spectrum and C(i, j) = row[(i - j) mod M].
Eigen::MatrixXd circulant_from_spectrum(const RealDft& dft, const Eigen::VectorXd& spectrum) {
  const int m = dft.size();
  std::vector<std::complex<double>> coeff(dft.num_modes());
  for (int k = 0; k < dft.num_modes(); ++k) coeff[k] = {spectrum[k], 0.0};
  const std::vector<double> row = dft.inverse(coeff);
  Eigen::MatrixXd cov(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      int d = (i - j) % m;
      if (d < 0) d += m;
      cov(i, j) = row[d];
    }
  }
  return cov;
}
}  // namespace

StSpectralTables st_spectral_tables(const StParams& params) {
  const int m = params.state_dim;
  const int num_modes = m / 2 + 1;
  const bool even = m % 2 == 0;
  StSpectralTables tables;
  tables.psi.resize(num_modes);
  tables.lambda_tilde.resize(num_modes);
  tables.a.resize(num_modes);
  tables.b.resize(num_modes);
  tables.c.resize(num_modes);
  for (int k = 0; k < num_modes; ++k) {
    const double omega = kTwoPi * k;
    const double psi = params.theta1 * omega * omega + params.theta3;
    if (psi <= 0.0) {
      throw std::invalid_argument(
          "st_spectral_tables: theta1*omega^2 + theta3 must be positive");
    }
    tables.psi[k] = psi;
    tables.lambda_tilde[k] =
        params.kernel_amp * std::exp(-omega * omega * params.kernel_length * params.kernel_length);
    tables.a[k] = tables.lambda_tilde[k] / std::sqrt(2.0 * psi);
    const bool nyquist = even && k == num_modes - 1;
    const std::complex<double> xi =
        nyquist ? std::complex<double>(-psi, 0.0)
                : std::complex<double>(-psi, params.theta2 * omega);
    tables.b[k] = std::exp(xi * params.delta);
    tables.c[k] = tables.a[k] * std::sqrt(1.0 - std::exp(-2.0 * psi * params.delta));
  }
  return tables;
}

StochasticTurbulenceModel::StochasticTurbulenceModel(const StParams& params)
    : params_(params),
      tables_(st_spectral_tables(params)),
      dft_(params.state_dim),
      obs_(ObservationModel::equispaced(params.state_dim, params.num_obs,
                                        params.obs_noise_std, ObsMap::Identity)) {}

void StochasticTurbulenceModel::init_ensemble(Eigen::MatrixXd& particles,
                                              std::uint64_t seed) const {
  const int p = static_cast<int>(particles.rows());
  const int m = params_.state_dim;
  if (particles.cols() != m) throw std::invalid_argument("init_ensemble: shape mismatch");
  ThreadPool::global().parallel_for(0, p, [&](int i) {
    RngStream stream = make_stream(seed, StreamDomain::EnsembleInit, 0, i);
    std::vector<std::complex<double>> noise;
    draw_spectral_noise(stream, m, noise);
    for (int k = 0; k < dft_.num_modes(); ++k) noise[k] *= tables_.a[k];
    std::vector<double> row(m);
    RealDft::Workspace ws;
    dft_.inverse(noise.data(), row.data(), ws);
    for (int j = 0; j < m; ++j) particles(i, j) = row[j];
  });
}

void StochasticTurbulenceModel::forward(Eigen::MatrixXd& particles, int time_index,
                                        std::uint64_t seed) const {
  const int p = static_cast<int>(particles.rows());
  const int m = params_.state_dim;
  if (particles.cols() != m) throw std::invalid_argument("forward: shape mismatch");
  ThreadPool::global().parallel_for(0, p, [&](int i) {
    RngStream stream = make_stream(seed, StreamDomain::Forward, time_index, i);
    std::vector<std::complex<double>> noise;
    draw_spectral_noise(stream, m, noise);
    std::vector<double> row(m);
    for (int j = 0; j < m; ++j) row[j] = particles(i, j);
    std::vector<std::complex<double>> spectral(dft_.num_modes());
    RealDft::Workspace ws;
    dft_.forward(row.data(), spectral.data(), ws);
    for (int k = 0; k < dft_.num_modes(); ++k) {
      spectral[k] = tables_.b[k] * spectral[k] + tables_.c[k] * noise[k];
    }
    dft_.inverse(spectral.data(), row.data(), ws);
    for (int j = 0; j < m; ++j) particles(i, j) = row[j];
  });
}

Eigen::VectorXd StochasticTurbulenceModel::apply_transition_mean(
    const Eigen::VectorXd& state) const {
  const int m = params_.state_dim;
  std::vector<double> row(state.data(), state.data() + m);
  std::vector<std::complex<double>> spectral(dft_.num_modes());
  RealDft::Workspace ws;
  dft_.forward(row.data(), spectral.data(), ws);
  for (int k = 0; k < dft_.num_modes(); ++k) spectral[k] *= tables_.b[k];
  dft_.inverse(spectral.data(), row.data(), ws);
  return Eigen::Map<Eigen::VectorXd>(row.data(), m);
}

Eigen::MatrixXd StochasticTurbulenceModel::propagate_covariance(
    const Eigen::MatrixXd& cov) const {
  const int m = params_.state_dim;
  Eigen::MatrixXd out(m, m);
  // F C: apply the spectral map to each column, then repeat on rows for F^T.
  ThreadPool::global().parallel_for(0, m, [&](int j) {
    out.col(j) = apply_transition_mean(cov.col(j));
  });
  Eigen::MatrixXd result(m, m);
  ThreadPool::global().parallel_for(0, m, [&](int i) {
    result.row(i) = apply_transition_mean(out.row(i).transpose()).transpose();
  });
  return result;
}

Eigen::MatrixXd StochasticTurbulenceModel::process_noise_covariance() const {
  Eigen::VectorXd spectrum = tables_.c.array().square();
  return circulant_from_spectrum(dft_, spectrum);
}

Eigen::MatrixXd StochasticTurbulenceModel::stationary_covariance() const {
  Eigen::VectorXd spectrum = tables_.a.array().square();
  return circulant_from_spectrum(dft_, spectrum);
}

double StochasticTurbulenceModel::stationary_variance() const {
  const int num_modes = dft_.num_modes();
  const bool even = params_.state_dim % 2 == 0;
  double var = tables_.a[0] * tables_.a[0];
  const int last_complex = even ? num_modes - 2 : num_modes - 1;
  for (int k = 1; k <= last_complex; ++k) var += 2.0 * tables_.a[k] * tables_.a[k];
  if (even) var += tables_.a[num_modes - 1] * tables_.a[num_modes - 1];
  return var;
}

}  // namespace otlpf
