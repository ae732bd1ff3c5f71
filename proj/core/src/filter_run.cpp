#include <chrono>
#include <cmath>

#include "otlpf/filters.hpp"
#include "otlpf/metrics.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {

double letkf_median_n_eff(const ObservationModel& obs, const LocalisationSpec& loc, int m) {
  const PeriodicMesh mesh(m);
  std::vector<double> n_eff(m, 0.0);
  for (int node = 0; node < m; ++node) {
    for (int l = 0; l < obs.num_obs; ++l) {
      n_eff[node] += loc_weight(loc, periodic_distance(mesh.position(node), obs.locations[l]));
    }
  }
  return median(n_eff);
}

void apply_inflation(Eigen::MatrixXd& particles, double factor) {
  const Eigen::RowVectorXd mean = particles.colwise().mean();
  particles = ((particles.rowwise() - mean) * factor).rowwise() + mean;
}

}  // namespace

FilterRunResult filter_run(const ForwardModel& model, const FilterConfig& config,
                           const Eigen::MatrixXd& observations, std::uint64_t seed,
                           const FilterRunOptions& options) {
  const int m = model.state_dim();
  const ObservationModel& obs = model.observation();
  const int num_times = static_cast<int>(observations.rows());
  const int p = config.num_particles;
  if (observations.cols() != obs.num_obs) {
    throw std::invalid_argument("filter_run: observation shape mismatch");
  }
  if (p < 2) throw std::invalid_argument("filter_run: need at least two particles");
  if (options.truth != nullptr &&
      (options.truth->rows() != num_times || options.truth->cols() != m)) {
    throw std::invalid_argument("filter_run: truth shape mismatch");
  }

  FilterRunResult result;
  result.means.resize(num_times, m);
  result.stds.resize(num_times, m);
  result.smoothness.resize(num_times);
  if (options.truth != nullptr) result.rank_counts.assign(p + 1, 0);

  PartitionOfUnity pou;
  if (config.kind == FilterKind::Sletpf) {
    const PeriodicMesh mesh(m);
    pou = build_pou(build_equal_partition(mesh, config.patch_count), mesh,
                    config.kernel_width, config.subsample);
    result.median_n_eff = median(effective_observations(
        pou, std::span<const double>(obs.locations.data(), obs.locations.size()),
        config.loc));
  } else if (config.kind == FilterKind::Letkf) {
    result.median_n_eff = letkf_median_n_eff(obs, config.loc, m);
  } else {
    result.median_n_eff = static_cast<double>(obs.num_obs);
  }

  Eigen::MatrixXd particles(p, m);
  model.init_ensemble(particles, seed);

  SletpfStats sletpf_stats;
  double assim_seconds = 0.0;

  for (int t = 0; t < num_times; ++t) {
    if (t > 0) model.forward(particles, t, seed);
    if (config.inflation != 1.0) apply_inflation(particles, config.inflation);

    const Eigen::VectorXd y = observations.row(t).transpose();
    const auto tic = std::chrono::steady_clock::now();
    switch (config.kind) {
      case FilterKind::Letkf:
        letkf_assimilate(particles, obs, y, config.loc);
        break;
      case FilterKind::Etpf: {
        const LocalWeights weights = compute_local_weights(
            particles, obs, y, WeightGranularity::Global, config.loc);
        result.degenerate_weight_events += weights.degenerate_units;
        etpf_assimilate(particles, weights.normalised.row(0).transpose(), config.ot);
        break;
      }
      case FilterKind::Sletpf:
        sletpf_assimilate(particles, pou, obs, y, config.loc, config.ot, &sletpf_stats);
        break;
      case FilterKind::BootstrapPf: {
        const LocalWeights weights = compute_local_weights(
            particles, obs, y, WeightGranularity::Global, config.loc);
        result.degenerate_weight_events += weights.degenerate_units;
        RngStream stream = make_stream(seed, StreamDomain::Resampling, t);
        const Eigen::VectorXd w = weights.normalised.row(0).transpose();
        const std::vector<int> ancestors = config.resample == ResampleKind::Systematic
                                               ? resample_systematic(w, stream)
                                               : resample_multinomial(w, stream);
        Eigen::MatrixXd resampled(p, m);
        for (int i = 0; i < p; ++i) resampled.row(i) = particles.row(ancestors[i]);
        particles.swap(resampled);
        break;
      }
    }
    assim_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();

    auto [mean, std] = ensemble_stats(particles);
    result.means.row(t) = mean.transpose();
    result.stds.row(t) = std.transpose();
    result.smoothness[t] = smoothness_coefficient(particles);
    if (options.truth != nullptr) {
      accumulate_ranks(particles, options.truth->row(t), result.rank_counts);
    }
    if (options.keep_ensembles) result.ensembles.push_back(particles);
  }

  result.assimilation_seconds = assim_seconds;
  result.degenerate_weight_events += sletpf_stats.degenerate_weight_units;
  return result;
}

}  // namespace otlpf
