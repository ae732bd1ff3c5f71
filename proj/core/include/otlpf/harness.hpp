#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "otlpf/filters.hpp"
#include "otlpf/metrics.hpp"
#include "otlpf/models.hpp"

namespace otlpf {

enum class ModelKind { StLinear, StTransformed, KsLinear, KsTanh };
enum class TruthSource { Auto, Kalman, Pushforward, Reference, None };

struct GridSpec {
  std::vector<double> radii;
  std::vector<int> patch_counts;       // empty: use filter.patch_count
  std::vector<double> kernel_widths;   // empty: use filter.kernel_width
  // Admissibility window on median effective observations per patch; values
  // < 0 select the model-kind default ([1,5] except [2,6] for tanh-KS).
  double n_eff_min = -1.0;
  double n_eff_max = -1.0;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::StLinear;
  StParams st;
  KsParams ks;
  FilterConfig filter;
  GridSpec grid;

  std::uint64_t seed = 1;
  int repeats = 1;
  std::string out;
  TruthSource truth_source = TruthSource::Auto;
  int pushforward_samples = 10000;
  int reference_particles = 100000;
  bool dump_ensembles = false;
  int threads = 0;  // 0: leave the global pool unchanged
};

// Flat key=value text with dotted sections (model.*, filter.*, grid.*,
// run.*). Unknown keys are hard errors. '#' starts a comment. Doubles accept
// fraction syntax (1/512); grid lists accept comma lists and start:step:end
// ranges.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

std::shared_ptr<const ForwardModel> make_model(const ExperimentConfig& config);
int config_num_times(const ExperimentConfig& config);

std::string model_kind_name(ModelKind kind);
std::string filter_kind_name(FilterKind kind);

// Canonical serialisation and its FNV-1a hash, echoed into run logs so result
// rows can be traced back to an exact configuration.
std::string canonical_config_string(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

// The master seed splits into one truth stream and per-repeat filter streams,
// so every filter in a sweep assimilates the same observation sequence.
std::uint64_t truth_seed(std::uint64_t master);
std::uint64_t filter_seed(std::uint64_t master, int repeat);

struct RunResult {
  MetricsRecord metrics;
  std::uint64_t config_hash = 0;
  double wall_seconds = 0.0;
  FilterRunResult details;
};

// Simulates truth + observations for the configured model.
Simulation simulate_truth(const ExperimentConfig& config, std::uint64_t master_seed);

// Ground truth per the configured source; nullopt-like empty matrices when
// the source resolves to None.
bool has_ground_truth(const ExperimentConfig& config);
GroundTruth make_ground_truth(const ExperimentConfig& config, const ForwardModel& model,
                              const Eigen::MatrixXd& observations);

// One filter run on a fixed observation sequence, metrics against the
// optional ground truth.
RunResult run_single(const ExperimentConfig& config, const ForwardModel& model,
                     const Eigen::MatrixXd& observations, const GroundTruth* truth,
                     int repeat, const Eigen::MatrixXd* truth_states = nullptr);

// CSV schema (version 1):
// schema_version,model,filter,B,w,r,P,seed,repeat,rmse_mean,rmse_std,
// rmse_smooth,median_n_eff,assim_seconds,error
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const ExperimentConfig& config,
                   const MetricsRecord& record);

// Runs repeats of the configured filter, appending one CSV row per repeat.
// Individual run failures become rows with the error column set.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config, std::ostream& csv);

// Grid search over (B, w, r) for SLETPF (with the admissibility filter on
// median effective observations) or over r for the other filters. Emits
// repeats rows per cell.
std::vector<MetricsRecord> grid_search(const ExperimentConfig& config, std::ostream& csv);

// Same sweep against a pre-computed observation sequence and ground truth,
// so several sweeps can share one (expensive) truth computation.
std::vector<MetricsRecord> grid_search(const ExperimentConfig& config, std::ostream& csv,
                                       const ForwardModel& model, const Simulation& sim,
                                       const GroundTruth* truth);

}  // namespace otlpf
