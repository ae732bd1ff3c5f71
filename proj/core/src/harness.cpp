#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "otlpf/binary_io.hpp"
#include "otlpf/harness.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string sanitise_error(std::string message) {
  for (char& c : message) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return message;
}

void admissibility_window(const ExperimentConfig& config, double& lo, double& hi) {
  lo = config.grid.n_eff_min;
  hi = config.grid.n_eff_max;
  if (lo < 0.0) lo = config.model == ModelKind::KsTanh ? 2.0 : 1.0;
  if (hi < 0.0) hi = config.model == ModelKind::KsTanh ? 6.0 : 5.0;
}

}  // namespace

std::uint64_t truth_seed(std::uint64_t master) {
  return mix_seed(master, 0x7472757468ULL);  // "truth"
}

std::uint64_t filter_seed(std::uint64_t master, int repeat) {
  return mix_seed(mix_seed(master, 0x66696c746572ULL),  // "filter"
                  static_cast<std::uint64_t>(repeat));
}

Simulation simulate_truth(const ExperimentConfig& config, std::uint64_t master_seed) {
  const auto model = make_model(config);
  return model->simulate_truth(config_num_times(config), truth_seed(master_seed));
}

bool has_ground_truth(const ExperimentConfig& config) {
  switch (config.truth_source) {
    case TruthSource::None:
      return false;
    case TruthSource::Auto:
      return config.model == ModelKind::StLinear || config.model == ModelKind::StTransformed;
    default:
      return true;
  }
}

GroundTruth make_ground_truth(const ExperimentConfig& config, const ForwardModel& model,
                              const Eigen::MatrixXd& observations) {
  TruthSource source = config.truth_source;
  if (source == TruthSource::Auto) {
    if (config.model == ModelKind::StLinear) {
      source = TruthSource::Kalman;
    } else if (config.model == ModelKind::StTransformed) {
      source = TruthSource::Pushforward;
    } else {
      throw std::invalid_argument(
          "make_ground_truth: no automatic ground truth for KS models");
    }
  }
  switch (source) {
    case TruthSource::Kalman: {
      const auto* st = dynamic_cast<const StochasticTurbulenceModel*>(&model);
      if (st == nullptr) {
        throw std::invalid_argument("make_ground_truth: kalman source needs the ST model");
      }
      return kalman_ground_truth(*st, observations);
    }
    case TruthSource::Pushforward: {
      const auto* transformed = dynamic_cast<const TransformedModel*>(&model);
      if (transformed == nullptr) {
        throw std::invalid_argument(
            "make_ground_truth: pushforward source needs the transformed ST model");
      }
      const auto* st = dynamic_cast<const StochasticTurbulenceModel*>(&transformed->base());
      if (st == nullptr) {
        throw std::invalid_argument(
            "make_ground_truth: pushforward source needs an ST base model");
      }
      return pushforward_ground_truth(*st, observations, transformed->transform(),
                                      config.pushforward_samples,
                                      truth_seed(config.seed));
    }
    case TruthSource::Reference: {
      FilterConfig reference;
      reference.kind = FilterKind::BootstrapPf;
      reference.num_particles = config.reference_particles;
      reference.resample = ResampleKind::Systematic;
      return reference_ensemble_ground_truth(
          model, reference, observations,
          mix_seed(truth_seed(config.seed), 0x726566ULL));  // "ref"
    }
    default:
      throw std::invalid_argument("make_ground_truth: no ground truth configured");
  }
}

RunResult run_single(const ExperimentConfig& config, const ForwardModel& model,
                     const Eigen::MatrixXd& observations, const GroundTruth* truth,
                     int repeat, const Eigen::MatrixXd* truth_states) {
  RunResult result;
  result.config_hash = config_hash(config);
  MetricsRecord& metrics = result.metrics;
  metrics.patch_count = config.filter.patch_count;
  metrics.kernel_width = config.filter.kernel_width;
  metrics.radius = config.filter.loc.radius;
  metrics.num_particles = config.filter.num_particles;
  metrics.seed = filter_seed(config.seed, repeat);
  metrics.repeat = repeat;

  FilterRunOptions options;
  options.truth = truth_states;
  options.keep_ensembles = config.dump_ensembles;

  const auto tic = std::chrono::steady_clock::now();
  result.details = filter_run(model, config.filter, observations, metrics.seed, options);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();

  metrics.median_n_eff = result.details.median_n_eff;
  metrics.assimilation_seconds = result.details.assimilation_seconds;
  if (truth != nullptr) {
    metrics.rmse_mean = rmse(result.details.means, truth->means);
    metrics.rmse_std = rmse(result.details.stds, truth->stds);
    metrics.rmse_smoothness = rmse_series(result.details.smoothness, truth->smoothness);
  }
  return result;
}

void write_csv_header(std::ostream& out) {
  out << "schema_version,model,filter,B,w,r,P,seed,repeat,rmse_mean,rmse_std,"
         "rmse_smooth,median_n_eff,assim_seconds,error\n";
}

void write_csv_row(std::ostream& out, const ExperimentConfig& config,
                   const MetricsRecord& record) {
  out << 1 << ',' << model_kind_name(config.model) << ','
      << filter_kind_name(config.filter.kind) << ',';
  if (config.filter.kind == FilterKind::Sletpf) {
    out << record.patch_count << ',' << format_double(record.kernel_width);
  } else {
    out << ',';
  }
  out << ',' << format_double(record.radius) << ',' << record.num_particles << ','
      << record.seed << ',' << record.repeat << ',' << format_double(record.rmse_mean)
      << ',' << format_double(record.rmse_std) << ','
      << format_double(record.rmse_smoothness) << ',' << format_double(record.median_n_eff)
      << ',' << format_double(record.assimilation_seconds) << ','
      << sanitise_error(record.error) << '\n';
}

namespace {

// Shared by run_experiment and grid_search: repeats of one configured cell.
void run_cell(const ExperimentConfig& config, const ForwardModel& model,
              const Eigen::MatrixXd& observations, const GroundTruth* truth,
              const Eigen::MatrixXd* truth_states, std::ostream& csv,
              std::vector<MetricsRecord>& rows) {
  for (int repeat = 0; repeat < config.repeats; ++repeat) {
    MetricsRecord record;
    try {
      record = run_single(config, model, observations, truth, repeat, truth_states).metrics;
    } catch (const std::exception& e) {
      record.patch_count = config.filter.patch_count;
      record.kernel_width = config.filter.kernel_width;
      record.radius = config.filter.loc.radius;
      record.num_particles = config.filter.num_particles;
      record.seed = filter_seed(config.seed, repeat);
      record.repeat = repeat;
      record.error = e.what();
    }
    write_csv_row(csv, config, record);
    rows.push_back(record);
  }
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config, std::ostream& csv) {
  const auto model = make_model(config);
  const Simulation sim = model->simulate_truth(config_num_times(config), truth_seed(config.seed));
  GroundTruth truth;
  const bool with_truth = has_ground_truth(config);
  if (with_truth) truth = make_ground_truth(config, *model, sim.observations);

  std::vector<MetricsRecord> rows;
  run_cell(config, *model, sim.observations, with_truth ? &truth : nullptr, &sim.states,
           csv, rows);
  return rows;
}

std::vector<MetricsRecord> grid_search(const ExperimentConfig& config, std::ostream& csv) {
  const auto model = make_model(config);
  const Simulation sim = model->simulate_truth(config_num_times(config), truth_seed(config.seed));
  GroundTruth truth;
  const bool with_truth = has_ground_truth(config);
  if (with_truth) truth = make_ground_truth(config, *model, sim.observations);
  return grid_search(config, csv, *model, sim, with_truth ? &truth : nullptr);
}

std::vector<MetricsRecord> grid_search(const ExperimentConfig& config, std::ostream& csv,
                                       const ForwardModel& model, const Simulation& sim,
                                       const GroundTruth* truth) {
  std::vector<double> radii = config.grid.radii;
  if (radii.empty()) radii.push_back(config.filter.loc.radius);
  std::vector<int> patch_counts = config.grid.patch_counts;
  if (patch_counts.empty()) patch_counts.push_back(config.filter.patch_count);
  std::vector<double> kernel_widths = config.grid.kernel_widths;
  if (kernel_widths.empty()) kernel_widths.push_back(config.filter.kernel_width);

  double n_lo = 0.0, n_hi = 0.0;
  admissibility_window(config, n_lo, n_hi);

  std::vector<MetricsRecord> rows;
  const ObservationModel& obs = model.observation();

  if (config.filter.kind != FilterKind::Sletpf) {
    for (double r : radii) {
      ExperimentConfig cell = config;
      cell.filter.loc.radius = r;
      run_cell(cell, model, sim.observations, truth, &sim.states, csv, rows);
    }
    return rows;
  }

  const PeriodicMesh mesh(model.state_dim());
  for (int b : patch_counts) {
    for (double w : kernel_widths) {
      const PartitionOfUnity pou =
          build_pou(build_equal_partition(mesh, b), mesh, w, config.filter.subsample);
      for (double r : radii) {
        LocalisationSpec loc = config.filter.loc;
        loc.radius = r;
        const double n_med = median(effective_observations(
            pou, std::span<const double>(obs.locations.data(), obs.locations.size()), loc));
        if (n_med < n_lo || n_med > n_hi) continue;  // inadmissible radius
        ExperimentConfig cell = config;
        cell.filter.patch_count = b;
        cell.filter.kernel_width = w;
        cell.filter.loc.radius = r;
        run_cell(cell, model, sim.observations, truth, &sim.states, csv, rows);
      }
    }
  }
  return rows;
}

}  // namespace otlpf
