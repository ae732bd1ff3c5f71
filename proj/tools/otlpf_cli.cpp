// Command line front end: twin-experiment simulation, filtering runs, grid
// searches, rank histograms and ground-truth generation, all driven by a flat
// key=value config file.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "otlpf/binary_io.hpp"
#include "otlpf/harness.hpp"
#include "otlpf/metrics.hpp"
#include "otlpf/thread_pool.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool dump_ensembles = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
  cmd->add_option("--config", args.config_path, "Path to key=value config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Master seed override (64-bit unsigned)");
  auto* out_opt = cmd->add_option("--out", args.out, "Output path or prefix");
  if (out_required) out_opt->required();
  cmd->add_option("--threads", args.threads, "Worker pool size (env OTLPF_THREADS as fallback)");
  cmd->add_flag("--dump-ensembles", args.dump_ensembles,
                "Write per-time ensemble snapshots next to the output");
}

otlpf::ExperimentConfig load_config(const CommonArgs& args) {
  otlpf::ExperimentConfig config = otlpf::parse_config_file(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (!args.out.empty()) config.out = args.out;
  if (args.dump_ensembles) config.dump_ensembles = true;
  int threads = args.threads > 0 ? args.threads : config.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("OTLPF_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) otlpf::ThreadPool::set_global_threads(threads);
  return config;
}

std::ofstream open_csv(const std::string& path) {
  const bool fresh = !std::ifstream(path).good();
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  if (fresh) otlpf::write_csv_header(out);
  return out;
}

void dump_ensembles(const std::string& prefix, const otlpf::ExperimentConfig& config,
                    const otlpf::FilterRunResult& details, int repeat) {
  if (details.ensembles.empty()) return;
  const int p = static_cast<int>(details.ensembles[0].rows());
  const int m = static_cast<int>(details.ensembles[0].cols());
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(details.ensembles.size()) * p, m);
  for (std::size_t t = 0; t < details.ensembles.size(); ++t) {
    stacked.middleRows(static_cast<Eigen::Index>(t) * p, p) = details.ensembles[t];
  }
  otlpf::BinaryHeader header;
  header.state_dim = static_cast<std::uint32_t>(m);
  header.num_times = static_cast<std::uint32_t>(details.ensembles.size());
  header.num_obs = static_cast<std::uint32_t>(p);  // ensemble size for dumps
  otlpf::write_matrix_binary(prefix + ".rep" + std::to_string(repeat) + ".ensembles.bin",
                             stacked, header);
  (void)config;
}

int cmd_simulate(const CommonArgs& args) {
  const otlpf::ExperimentConfig config = load_config(args);
  const otlpf::Simulation sim = otlpf::simulate_truth(config, config.seed);
  otlpf::BinaryHeader header;
  header.state_dim = static_cast<std::uint32_t>(sim.states.cols());
  header.num_times = static_cast<std::uint32_t>(sim.states.rows());
  header.num_obs = static_cast<std::uint32_t>(sim.observations.cols());
  otlpf::write_matrix_binary(config.out + ".truth.bin", sim.states, header);
  otlpf::write_matrix_binary(config.out + ".obs.bin", sim.observations, header);
  otlpf::write_matrix_csv(config.out + ".obs.csv", sim.observations);
  std::fprintf(stderr, "simulate: wrote %s.{truth.bin,obs.bin,obs.csv} (config %016llx)\n",
               config.out.c_str(),
               static_cast<unsigned long long>(otlpf::config_hash(config)));
  return 0;
}

int cmd_filter(const CommonArgs& args, const std::string& pou_dump,
               const std::string& plan_dump) {
  otlpf::ExperimentConfig config = load_config(args);
  const auto model = otlpf::make_model(config);
  const otlpf::Simulation sim =
      model->simulate_truth(otlpf::config_num_times(config), otlpf::truth_seed(config.seed));
  otlpf::GroundTruth truth;
  const bool with_truth = otlpf::has_ground_truth(config);
  if (with_truth) truth = otlpf::make_ground_truth(config, *model, sim.observations);

  if (!pou_dump.empty() && config.filter.kind == otlpf::FilterKind::Sletpf) {
    const otlpf::PeriodicMesh mesh(model->state_dim());
    const otlpf::PartitionOfUnity pou = otlpf::build_pou(
        otlpf::build_equal_partition(mesh, config.filter.patch_count), mesh,
        config.filter.kernel_width, config.filter.subsample);
    otlpf::write_matrix_csv(pou_dump, pou.bump);
  }

  // Debugging hook: the per-patch transport plans of the first assimilation
  // step, stacked patch-major into one CSV.
  if (!plan_dump.empty() && config.filter.kind == otlpf::FilterKind::Sletpf) {
    const otlpf::PeriodicMesh mesh(model->state_dim());
    const otlpf::PartitionOfUnity pou = otlpf::build_pou(
        otlpf::build_equal_partition(mesh, config.filter.patch_count), mesh,
        config.filter.kernel_width, config.filter.subsample);
    Eigen::MatrixXd particles(config.filter.num_particles, model->state_dim());
    model->init_ensemble(particles, otlpf::filter_seed(config.seed, 0));
    std::vector<Eigen::MatrixXd> plans;
    otlpf::SletpfStats stats;
    stats.capture_plans = &plans;
    otlpf::sletpf_assimilate(particles, pou, model->observation(),
                             sim.observations.row(0).transpose(), config.filter.loc,
                             config.filter.ot, &stats);
    const int p = config.filter.num_particles;
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(plans.size()) * p, p);
    for (std::size_t b = 0; b < plans.size(); ++b) {
      stacked.middleRows(static_cast<Eigen::Index>(b) * p, p) = plans[b];
    }
    otlpf::write_matrix_csv(plan_dump, stacked);
  }

  std::ofstream csv = open_csv(config.out);
  for (int repeat = 0; repeat < config.repeats; ++repeat) {
    otlpf::MetricsRecord record;
    try {
      const otlpf::RunResult result = otlpf::run_single(
          config, *model, sim.observations, with_truth ? &truth : nullptr, repeat,
          &sim.states);
      record = result.metrics;
      if (config.dump_ensembles) {
        dump_ensembles(config.out, config, result.details, repeat);
      }
    } catch (const std::exception& e) {
      record.seed = otlpf::filter_seed(config.seed, repeat);
      record.repeat = repeat;
      record.radius = config.filter.loc.radius;
      record.patch_count = config.filter.patch_count;
      record.kernel_width = config.filter.kernel_width;
      record.num_particles = config.filter.num_particles;
      record.error = e.what();
    }
    otlpf::write_csv_row(csv, config, record);
  }
  return 0;
}

int cmd_grid_search(const CommonArgs& args) {
  const otlpf::ExperimentConfig config = load_config(args);
  std::ofstream csv = open_csv(config.out);
  const auto rows = otlpf::grid_search(config, csv);
  std::fprintf(stderr, "grid-search: %zu rows appended to %s\n", rows.size(),
               config.out.c_str());
  return 0;
}

int cmd_rank_hist(const CommonArgs& args) {
  const otlpf::ExperimentConfig config = load_config(args);
  const auto model = otlpf::make_model(config);
  const otlpf::Simulation sim =
      model->simulate_truth(otlpf::config_num_times(config), otlpf::truth_seed(config.seed));
  otlpf::FilterRunOptions options;
  options.truth = &sim.states;
  const otlpf::FilterRunResult run = otlpf::filter_run(
      *model, config.filter, sim.observations, otlpf::filter_seed(config.seed, 0), options);
  std::ofstream out(config.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + config.out);
  out << "bin,count\n";
  for (std::size_t i = 0; i < run.rank_counts.size(); ++i) {
    out << i << ',' << run.rank_counts[i] << '\n';
  }
  return 0;
}

int cmd_ground_truth(const CommonArgs& args) {
  const otlpf::ExperimentConfig config = load_config(args);
  const auto model = otlpf::make_model(config);
  const otlpf::Simulation sim =
      model->simulate_truth(otlpf::config_num_times(config), otlpf::truth_seed(config.seed));
  const otlpf::GroundTruth truth = otlpf::make_ground_truth(config, *model, sim.observations);
  otlpf::BinaryHeader header;
  header.state_dim = static_cast<std::uint32_t>(truth.means.cols());
  header.num_times = static_cast<std::uint32_t>(truth.means.rows());
  header.num_obs = static_cast<std::uint32_t>(model->observation().num_obs);
  otlpf::write_matrix_binary(config.out + ".means.bin", truth.means, header);
  otlpf::write_matrix_binary(config.out + ".stds.bin", truth.stds, header);
  otlpf::write_matrix_csv(config.out + ".smoothness.csv", truth.smoothness);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport local particle filtering test bench"};
  app.require_subcommand(1);

  CommonArgs sim_args, filter_args, grid_args, rank_args, truth_args;
  std::string pou_dump;
  std::string plan_dump;

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate truth and observations");
  add_common(simulate, sim_args);

  CLI::App* filter = app.add_subcommand("filter", "Run the configured filter");
  add_common(filter, filter_args);
  filter->add_option("--dump-pou", pou_dump, "Write the partition of unity to CSV");
  filter->add_option("--dump-plans", plan_dump,
                     "Write the first step's per-patch transport plans to CSV");

  CLI::App* grid = app.add_subcommand("grid-search", "Sweep (B, w, r) cells");
  add_common(grid, grid_args);

  CLI::App* rank = app.add_subcommand("rank-hist", "Rank histogram of one filter run");
  add_common(rank, rank_args);

  CLI::App* truth = app.add_subcommand("ground-truth", "Ground-truth filtering moments");
  add_common(truth, truth_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (filter->parsed()) return cmd_filter(filter_args, pou_dump, plan_dump);
    if (grid->parsed()) return cmd_grid_search(grid_args);
    if (rank->parsed()) return cmd_rank_hist(rank_args);
    if (truth->parsed()) return cmd_ground_truth(truth_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
