#include <cmath>
#include <complex>

#include "otlpf/models.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kContourPoints = 32;

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
}  // namespace

KsTables ks_spectral_tables(const KsParams& params) {
  const int m = params.state_dim;
  const int num_modes = m / 2 + 1;
  const double h = params.delta;
  KsTables tables;
  tables.linear_symbol.resize(num_modes);
  tables.e_full.resize(num_modes);
  tables.e_half.resize(num_modes);
  tables.q.resize(num_modes);
  tables.f1.resize(num_modes);
  tables.f2.resize(num_modes);
  tables.f3.resize(num_modes);
  tables.lambda_tilde.resize(num_modes);
  tables.noise_scale.resize(num_modes);

  for (int k = 0; k < num_modes; ++k) {
    const double omega = kTwoPi * k;
    const double ratio = omega / params.theta1;
    tables.linear_symbol[k] = ratio * ratio - ratio * ratio * ratio * ratio - params.theta2;
    tables.e_full[k] = std::exp(tables.linear_symbol[k] * h);
    tables.e_half[k] = std::exp(tables.linear_symbol[k] * h / 2.0);
    tables.lambda_tilde[k] =
        params.theta4 * std::exp(-omega * omega * params.theta3 * params.theta3);
    tables.noise_scale[k] = tables.lambda_tilde[k] * std::sqrt(h);

    // phi-function coefficients via contour-integral means around z = L_k h,
    // avoiding cancellation for small |z|.
    const std::complex<double> z(tables.linear_symbol[k] * h, 0.0);
    std::complex<double> acc_q{0.0, 0.0}, acc_f1{0.0, 0.0}, acc_f2{0.0, 0.0}, acc_f3{0.0, 0.0};
    for (int j = 0; j < kContourPoints; ++j) {
      const double angle = kTwoPi * (j + 0.5) / kContourPoints;
      const std::complex<double> lr = z + std::complex<double>(std::cos(angle), std::sin(angle));
      const std::complex<double> elr = std::exp(lr);
      const std::complex<double> lr2 = lr * lr;
      const std::complex<double> lr3 = lr2 * lr;
      acc_q += (std::exp(lr / 2.0) - 1.0) / lr;
      acc_f1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr2)) / lr3;
      acc_f2 += (2.0 + lr + elr * (-2.0 + lr)) / lr3;
      acc_f3 += (-4.0 - 3.0 * lr - lr2 + elr * (4.0 - lr)) / lr3;
    }
    const double scale = h / kContourPoints;
    tables.q[k] = scale * acc_q.real();
    tables.f1[k] = scale * acc_f1.real();
    tables.f2[k] = scale * acc_f2.real();
    tables.f3[k] = scale * acc_f3.real();
  }
  return tables;
}

KuramotoSivashinskyModel::KuramotoSivashinskyModel(const KsParams& params)
    : params_(params),
      tables_(ks_spectral_tables(params)),
      dft_(params.state_dim),
      obs_(ObservationModel::equispaced(
          params.state_dim, params.num_obs, params.obs_noise_std,
          params.tanh_observations ? ObsMap::Tanh : ObsMap::Identity)) {
  if (params.state_dim % 2 != 0) {
    throw std::invalid_argument("KuramotoSivashinskyModel: even M required");
  }
}

struct KuramotoSivashinskyModel::StepScratch {
  RealDft::Workspace ws;
  std::vector<double> field;
  std::vector<std::complex<double>> nu, na, nb, nc, ua, ub, uc;
};

void KuramotoSivashinskyModel::nonlinear(const std::vector<std::complex<double>>& u,
                                         std::vector<std::complex<double>>& out,
                                         RealDft::Workspace& ws,
                                         std::vector<double>& field) const {
  const int m = params_.state_dim;
  const int num_modes = dft_.num_modes();
  out.resize(num_modes);
  if (!params_.nonlinear_term) {
    for (auto& v : out) v = {0.0, 0.0};
    return;
  }
  field.resize(m);
  dft_.inverse(u.data(), field.data(), ws);
  for (double& v : field) v *= v;
  dft_.forward(field.data(), out.data(), ws);
  for (int k = 0; k < num_modes; ++k) {
    const double omega = kTwoPi * k;
    // multiply by i*omega/(2*theta1); Nyquist term forced to zero
    out[k] = std::complex<double>(0.0, omega / (2.0 * params_.theta1)) * out[k];
  }
  out[num_modes - 1] = {0.0, 0.0};
}

void KuramotoSivashinskyModel::drift(const std::vector<std::complex<double>>& spectral,
                                     std::vector<std::complex<double>>& out,
                                     RealDft::Workspace& ws) const {
  std::vector<double> field;
  nonlinear(spectral, out, ws, field);
  for (int k = 0; k < dft_.num_modes(); ++k) {
    out[k] += tables_.linear_symbol[k] * spectral[k];
  }
}

void KuramotoSivashinskyModel::etdrk4_step(std::vector<std::complex<double>>& u,
                                           StepScratch& s) const {
  const int num_modes = dft_.num_modes();
  nonlinear(u, s.nu, s.ws, s.field);
  s.ua.resize(num_modes);
  s.ub.resize(num_modes);
  s.uc.resize(num_modes);
  for (int k = 0; k < num_modes; ++k) {
    s.ua[k] = tables_.e_half[k] * u[k] + tables_.q[k] * s.nu[k];
  }
  nonlinear(s.ua, s.na, s.ws, s.field);
  for (int k = 0; k < num_modes; ++k) {
    s.ub[k] = tables_.e_half[k] * u[k] + tables_.q[k] * s.na[k];
  }
  nonlinear(s.ub, s.nb, s.ws, s.field);
  for (int k = 0; k < num_modes; ++k) {
    s.uc[k] = tables_.e_half[k] * s.ua[k] + tables_.q[k] * (2.0 * s.nb[k] - s.nu[k]);
  }
  nonlinear(s.uc, s.nc, s.ws, s.field);
  for (int k = 0; k < num_modes; ++k) {
    u[k] = tables_.e_full[k] * u[k] + tables_.f1[k] * s.nu[k] +
           2.0 * tables_.f2[k] * (s.na[k] + s.nb[k]) + tables_.f3[k] * s.nc[k];
  }
}

void KuramotoSivashinskyModel::init_ensemble(Eigen::MatrixXd& particles,
                                             std::uint64_t seed) const {
  const int p = static_cast<int>(particles.rows());
  const int m = params_.state_dim;
  if (particles.cols() != m) throw std::invalid_argument("init_ensemble: shape mismatch");
  ThreadPool::global().parallel_for(0, p, [&](int i) {
    RngStream stream = make_stream(seed, StreamDomain::EnsembleInit, 0, i);
    std::vector<std::complex<double>> u;
    draw_spectral_noise(stream, m, u);
    for (int k = 0; k < dft_.num_modes(); ++k) u[k] *= tables_.lambda_tilde[k];
    StepScratch scratch;
    std::vector<std::complex<double>> noise;
    for (int step = 0; step < params_.burn_steps; ++step) {
      etdrk4_step(u, scratch);
      draw_spectral_noise(stream, m, noise);
      for (int k = 0; k < dft_.num_modes(); ++k) u[k] += tables_.noise_scale[k] * noise[k];
      u[0].imag(0.0);
      u[dft_.num_modes() - 1].imag(0.0);
    }
    std::vector<double> row(m);
    dft_.inverse(u.data(), row.data(), scratch.ws);
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(row[j])) throw ModelBlowUpError("ks init: non-finite state", 0);
      particles(i, j) = row[j];
    }
  });
}

void KuramotoSivashinskyModel::forward(Eigen::MatrixXd& particles, int time_index,
                                       std::uint64_t seed) const {
  const int p = static_cast<int>(particles.rows());
  const int m = params_.state_dim;
  if (particles.cols() != m) throw std::invalid_argument("forward: shape mismatch");
  ThreadPool::global().parallel_for(0, p, [&](int i) {
    RngStream stream = make_stream(seed, StreamDomain::Forward, time_index, i);
    StepScratch scratch;
    std::vector<double> row(m);
    for (int j = 0; j < m; ++j) row[j] = particles(i, j);
    std::vector<std::complex<double>> u(dft_.num_modes());
    dft_.forward(row.data(), u.data(), scratch.ws);
    std::vector<std::complex<double>> noise;
    for (int step = 0; step < params_.steps_per_obs; ++step) {
      etdrk4_step(u, scratch);
      draw_spectral_noise(stream, m, noise);
      for (int k = 0; k < dft_.num_modes(); ++k) u[k] += tables_.noise_scale[k] * noise[k];
      u[0].imag(0.0);
      u[dft_.num_modes() - 1].imag(0.0);
      for (int k = 0; k < dft_.num_modes(); ++k) {
        if (!std::isfinite(u[k].real()) || !std::isfinite(u[k].imag())) {
          throw ModelBlowUpError("ks forward: non-finite state", time_index);
        }
      }
    }
    dft_.inverse(u.data(), row.data(), scratch.ws);
    for (int j = 0; j < m; ++j) particles(i, j) = row[j];
  });
}

}  // namespace otlpf
