#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "otlpf/harness.hpp"

namespace otlpf {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  const auto slash = value.find('/');
  try {
    if (slash != std::string::npos) {
      const double num = std::stod(trim(value.substr(0, slash)));
      const double den = std::stod(trim(value.substr(slash + 1)));
      if (den == 0.0) bad_value(key, value);
      return num / den;
    }
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (trim(value.substr(used)).empty()) return parsed;
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  bad_value(key, value);
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long parsed = std::stol(value, &used, 10);
    if (trim(value.substr(used)).empty()) return parsed;
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  bad_value(key, value);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(value, &used, 10);
    if (trim(value.substr(used)).empty()) return parsed;
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  bad_value(key, value);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

// Comma list; each element may be a scalar or a start:step:end range
// (inclusive end, within half a step).
std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_double(key, item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) bad_value(key, item);
    const double start = parse_double(key, item.substr(0, c1));
    const double step = parse_double(key, item.substr(c1 + 1, c2 - c1 - 1));
    const double end = parse_double(key, item.substr(c2 + 1));
    if (step <= 0.0 || end < start) bad_value(key, item);
    const int count = static_cast<int>(std::floor((end - start) / step + 0.5)) + 1;
    for (int i = 0; i < count; ++i) out.push_back(start + i * step);
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

ModelKind parse_model_kind(const std::string& key, const std::string& value) {
  if (value == "st_linear") return ModelKind::StLinear;
  if (value == "st_transformed") return ModelKind::StTransformed;
  if (value == "ks_linear") return ModelKind::KsLinear;
  if (value == "ks_tanh") return ModelKind::KsTanh;
  bad_value(key, value);
}

FilterKind parse_filter_kind(const std::string& key, const std::string& value) {
  if (value == "letkf") return FilterKind::Letkf;
  if (value == "etpf") return FilterKind::Etpf;
  if (value == "sletpf") return FilterKind::Sletpf;
  if (value == "bootstrap_pf") return FilterKind::BootstrapPf;
  bad_value(key, value);
}

LocKind parse_loc_kind(const std::string& key, const std::string& value) {
  if (value == "gaspari_cohn") return LocKind::GaspariCohn;
  if (value == "uniform") return LocKind::Uniform;
  if (value == "triangular") return LocKind::Triangular;
  bad_value(key, value);
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& raw_key,
                        const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);

  if (key == "model.kind") {
    config.model = parse_model_kind(key, value);
  } else if (key == "model.nodes") {
    config.st.state_dim = static_cast<int>(parse_int(key, value));
    config.ks.state_dim = config.st.state_dim;
  } else if (key == "model.times") {
    config.st.num_times = static_cast<int>(parse_int(key, value));
    config.ks.num_times = config.st.num_times;
  } else if (key == "model.obs_locations") {
    config.st.num_obs = static_cast<int>(parse_int(key, value));
    config.ks.num_obs = config.st.num_obs;
  } else if (key == "model.obs_noise_std") {
    config.st.obs_noise_std = parse_double(key, value);
    config.ks.obs_noise_std = config.st.obs_noise_std;
  } else if (key == "model.delta") {
    config.st.delta = parse_double(key, value);
    config.ks.delta = config.st.delta;
  } else if (key == "model.theta1") {
    config.st.theta1 = parse_double(key, value);
    config.ks.theta1 = config.st.theta1;
  } else if (key == "model.theta2") {
    config.st.theta2 = parse_double(key, value);
    config.ks.theta2 = config.st.theta2;
  } else if (key == "model.theta3") {
    config.st.theta3 = parse_double(key, value);
    config.ks.theta3 = config.st.theta3;
  } else if (key == "model.theta4") {
    config.st.theta4 = parse_double(key, value);
    config.ks.theta4 = config.st.theta4;
  } else if (key == "model.kernel_length") {
    config.st.kernel_length = parse_double(key, value);
  } else if (key == "model.kernel_amplitude") {
    config.st.kernel_amp = parse_double(key, value);
  } else if (key == "model.steps_per_obs") {
    config.ks.steps_per_obs = static_cast<int>(parse_int(key, value));
  } else if (key == "model.burn_steps") {
    config.ks.burn_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "filter.kind") {
    config.filter.kind = parse_filter_kind(key, value);
  } else if (key == "filter.particles") {
    config.filter.num_particles = static_cast<int>(parse_int(key, value));
  } else if (key == "filter.radius") {
    config.filter.loc.radius = parse_double(key, value);
  } else if (key == "filter.localisation") {
    config.filter.loc.kind = parse_loc_kind(key, value);
  } else if (key == "filter.patches") {
    config.filter.patch_count = static_cast<int>(parse_int(key, value));
  } else if (key == "filter.kernel_width") {
    config.filter.kernel_width = parse_double(key, value);
  } else if (key == "filter.subsample") {
    if (value == "auto") {
      config.filter.subsample = SubsampleMode::Auto;
    } else if (value == "all") {
      config.filter.subsample = SubsampleMode::All;
    } else {
      bad_value(key, value);
    }
  } else if (key == "filter.ot") {
    if (value == "exact") {
      config.filter.ot.kind = OtSolverKind::Exact;
    } else if (value == "entropic") {
      config.filter.ot.kind = OtSolverKind::Entropic;
    } else {
      bad_value(key, value);
    }
  } else if (key == "filter.lambda") {
    config.filter.ot.lambda = parse_double(key, value);
  } else if (key == "filter.sinkhorn_tol") {
    config.filter.ot.sinkhorn.tol = parse_double(key, value);
  } else if (key == "filter.sinkhorn_max_iter") {
    config.filter.ot.sinkhorn.max_iter = static_cast<int>(parse_int(key, value));
  } else if (key == "filter.inflation") {
    config.filter.inflation = parse_double(key, value);
  } else if (key == "filter.resampling") {
    if (value == "systematic") {
      config.filter.resample = ResampleKind::Systematic;
    } else if (value == "multinomial") {
      config.filter.resample = ResampleKind::Multinomial;
    } else {
      bad_value(key, value);
    }
  } else if (key == "grid.radii") {
    config.grid.radii = parse_double_list(key, value);
  } else if (key == "grid.patches") {
    config.grid.patch_counts = parse_int_list(key, value);
  } else if (key == "grid.kernel_widths") {
    config.grid.kernel_widths = parse_double_list(key, value);
  } else if (key == "grid.n_eff_min") {
    config.grid.n_eff_min = parse_double(key, value);
  } else if (key == "grid.n_eff_max") {
    config.grid.n_eff_max = parse_double(key, value);
  } else if (key == "run.seed") {
    config.seed = parse_u64(key, value);
  } else if (key == "run.repeats") {
    config.repeats = static_cast<int>(parse_int(key, value));
  } else if (key == "run.out") {
    config.out = value;
  } else if (key == "run.truth") {
    if (value == "auto") {
      config.truth_source = TruthSource::Auto;
    } else if (value == "kalman") {
      config.truth_source = TruthSource::Kalman;
    } else if (value == "pushforward") {
      config.truth_source = TruthSource::Pushforward;
    } else if (value == "reference") {
      config.truth_source = TruthSource::Reference;
    } else if (value == "none") {
      config.truth_source = TruthSource::None;
    } else {
      bad_value(key, value);
    }
  } else if (key == "run.pushforward_samples") {
    config.pushforward_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "run.reference_particles") {
    config.reference_particles = static_cast<int>(parse_int(key, value));
  } else if (key == "run.dump_ensembles") {
    config.dump_ensembles = parse_bool(key, value);
  } else if (key == "run.threads") {
    config.threads = static_cast<int>(parse_int(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::stringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_number) +
                                  " is not key = value");
    }
    apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::StLinear: return "st_linear";
    case ModelKind::StTransformed: return "st_transformed";
    case ModelKind::KsLinear: return "ks_linear";
    case ModelKind::KsTanh: return "ks_tanh";
  }
  return "unknown";
}

std::string filter_kind_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::Letkf: return "letkf";
    case FilterKind::Etpf: return "etpf";
    case FilterKind::Sletpf: return "sletpf";
    case FilterKind::BootstrapPf: return "bootstrap_pf";
  }
  return "unknown";
}

std::shared_ptr<const ForwardModel> make_model(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::StLinear:
      return std::make_shared<StochasticTurbulenceModel>(config.st);
    case ModelKind::StTransformed: {
      auto base = std::make_shared<StochasticTurbulenceModel>(config.st);
      return std::make_shared<TransformedModel>(base, TransformSpec{config.st.theta4});
    }
    case ModelKind::KsLinear: {
      KsParams params = config.ks;
      params.tanh_observations = false;
      return std::make_shared<KuramotoSivashinskyModel>(params);
    }
    case ModelKind::KsTanh: {
      KsParams params = config.ks;
      params.tanh_observations = true;
      return std::make_shared<KuramotoSivashinskyModel>(params);
    }
  }
  throw std::invalid_argument("make_model: unknown model kind");
}

int config_num_times(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::StLinear:
    case ModelKind::StTransformed:
      return config.st.num_times;
    case ModelKind::KsLinear:
    case ModelKind::KsTanh:
      return config.ks.num_times;
  }
  return 0;
}

std::string canonical_config_string(const ExperimentConfig& config) {
  char buffer[4096];
  std::snprintf(
      buffer, sizeof(buffer),
      "model.kind=%s;M=%d;T=%d;L=%d;delta=%.17g;theta=%.17g,%.17g,%.17g,%.17g;"
      "kernel=%.17g,%.17g;obs_noise=%.17g;S=%d;burn=%d;"
      "filter=%s;P=%d;r=%.17g;loc=%d;B=%d;w=%.17g;subsample=%d;ot=%d;lambda=%.17g;"
      "inflation=%.17g;resample=%d;seed=%llu;repeats=%d",
      model_kind_name(config.model).c_str(), config.st.state_dim, config_num_times(config),
      config.st.num_obs, config.st.delta, config.st.theta1, config.st.theta2,
      config.st.theta3, config.st.theta4, config.st.kernel_length, config.st.kernel_amp,
      config.st.obs_noise_std, config.ks.steps_per_obs, config.ks.burn_steps,
      filter_kind_name(config.filter.kind).c_str(), config.filter.num_particles,
      config.filter.loc.radius, static_cast<int>(config.filter.loc.kind),
      config.filter.patch_count, config.filter.kernel_width,
      static_cast<int>(config.filter.subsample), static_cast<int>(config.filter.ot.kind),
      config.filter.ot.lambda, config.filter.inflation,
      static_cast<int>(config.filter.resample),
      static_cast<unsigned long long>(config.seed), config.repeats);
  return std::string(buffer);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string canonical = canonical_config_string(config);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace otlpf
