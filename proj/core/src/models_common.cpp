#include <cmath>

#include "otlpf/models.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

ObservationModel ObservationModel::equispaced(int state_dim, int num_obs,
                                              double noise_std, ObsMap map,
                                              double map_scale) {
  if (state_dim < 1 || num_obs < 1 || num_obs > state_dim) {
    throw std::invalid_argument("ObservationModel: invalid dimensions");
  }
  if (state_dim % (2 * num_obs) != 0) {
    throw std::invalid_argument(
        "ObservationModel: observed node indices (M/L)(l - 1/2) must be "
        "integers, so M must be divisible by 2L");
  }
  if (noise_std <= 0.0) {
    throw std::invalid_argument("ObservationModel: noise std must be > 0");
  }
  ObservationModel obs;
  obs.state_dim = state_dim;
  obs.num_obs = num_obs;
  obs.noise_std = noise_std;
  obs.map = map;
  obs.map_scale = map_scale;
  const int half_gap = state_dim / (2 * num_obs);
  for (int l = 1; l <= num_obs; ++l) {
    const int one_based = (2 * l - 1) * half_gap;
    obs.node_index.push_back(one_based - 1);
    obs.locations.push_back(static_cast<double>(one_based - 1) / state_dim);
  }
  return obs;
}

double ObservationModel::predict(double state_value) const {
  switch (map) {
    case ObsMap::Identity:
      return state_value;
    case ObsMap::Tanh:
      return std::tanh(state_value);
    case ObsMap::ScaledSinh:
      if (std::abs(state_value) > 700.0) {
        throw std::domain_error("ObservationModel: sinh overflow");
      }
      return std::sinh(state_value) / map_scale;
  }
  return state_value;
}

double ObservationModel::log_density(double y, double predicted) const {
  const double z = (y - predicted) / noise_std;
  constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;
  return -0.5 * z * z - std::log(noise_std) - kLogSqrtTwoPi;
}

Eigen::MatrixXd ObservationModel::predict_ensemble(const Eigen::MatrixXd& particles) const {
  const int p = static_cast<int>(particles.rows());
  Eigen::MatrixXd predicted(p, num_obs);
  for (int l = 0; l < num_obs; ++l) {
    const int node = node_index[l];
    for (int i = 0; i < p; ++i) predicted(i, l) = predict(particles(i, node));
  }
  return predicted;
}

Simulation ForwardModel::simulate_truth(int num_times, std::uint64_t seed) const {
  const int m = state_dim();
  const ObservationModel& obs = observation();
  Simulation sim;
  sim.states.resize(num_times, m);
  sim.observations.resize(num_times, obs.num_obs);

  Eigen::MatrixXd particle(1, m);
  init_ensemble(particle, seed);
  for (int t = 0; t < num_times; ++t) {
    if (t > 0) forward(particle, t, seed);
    sim.states.row(t) = particle.row(0);
    RngStream noise = make_stream(seed, StreamDomain::TruthObs, t);
    for (int l = 0; l < obs.num_obs; ++l) {
      const double predicted = obs.predict(particle(0, obs.node_index[l]));
      sim.observations(t, l) = predicted + obs.noise_std * noise.next_normal();
    }
  }
  return sim;
}

TransformedModel::TransformedModel(std::shared_ptr<const ForwardModel> base,
                                   TransformSpec spec)
    : base_(std::move(base)), spec_(spec) {
  if (!base_) throw std::invalid_argument("TransformedModel: null base model");
  const ObservationModel& base_obs = base_->observation();
  if (base_obs.map != ObsMap::Identity) {
    throw std::invalid_argument(
        "TransformedModel: only identity base observation maps are supported");
  }
  obs_ = base_obs;
  obs_.map = ObsMap::ScaledSinh;
  obs_.map_scale = spec_.scale;
}

void TransformedModel::init_ensemble(Eigen::MatrixXd& particles, std::uint64_t seed) const {
  base_->init_ensemble(particles, seed);
  particles = particles.unaryExpr(
      [this](double x) { return transform_apply(spec_, x); });
}

void TransformedModel::forward(Eigen::MatrixXd& particles, int time_index,
                               std::uint64_t seed) const {
  particles = particles.unaryExpr(
      [this](double y) { return transform_invert(spec_, y); });
  base_->forward(particles, time_index, seed);
  particles = particles.unaryExpr(
      [this](double x) { return transform_apply(spec_, x); });
}

Simulation TransformedModel::simulate_truth(int num_times, std::uint64_t seed) const {
  Simulation sim = base_->simulate_truth(num_times, seed);
  sim.states = sim.states.unaryExpr(
      [this](double x) { return transform_apply(spec_, x); });
  return sim;
}

}  // namespace otlpf
