#include <cmath>
#include <limits>

#include "otlpf/filters.hpp"
#include "otlpf/mesh.hpp"

namespace otlpf {

namespace {

// Normalises one row of log weights in place via log-sum-exp. Returns false
// if the row is fully degenerate (all -inf or NaN), in which case the
// normalised row is uniform.
bool normalise_row(const Eigen::RowVectorXd& log_w, Eigen::RowVectorXd& out) {
  const int p = static_cast<int>(log_w.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p; ++i) {
    if (std::isnan(log_w[i])) {
      out.setConstant(1.0 / p);
      return false;
    }
    max_log = std::max(max_log, log_w[i]);
  }
  if (!std::isfinite(max_log)) {
    out.setConstant(1.0 / p);
    return false;
  }
  double total = 0.0;
  for (int i = 0; i < p; ++i) total += std::exp(log_w[i] - max_log);
  for (int i = 0; i < p; ++i) out[i] = std::exp(log_w[i] - max_log) / total;
  return true;
}

}  // namespace

LocalWeights compute_local_weights(const Eigen::MatrixXd& particles,
                                   const ObservationModel& obs, const Eigen::VectorXd& y,
                                   WeightGranularity granularity,
                                   const LocalisationSpec& loc,
                                   const PartitionOfUnity* pou) {
  const int p = static_cast<int>(particles.rows());
  const int m = static_cast<int>(particles.cols());
  if (granularity == WeightGranularity::PerPatch && pou == nullptr) {
    throw std::invalid_argument("compute_local_weights: per-patch weights need a PoU");
  }
  const PeriodicMesh mesh(m);

  // Per-particle per-location log observation densities.
  Eigen::MatrixXd log_g(p, obs.num_obs);
  for (int l = 0; l < obs.num_obs; ++l) {
    const int node = obs.node_index[l];
    for (int i = 0; i < p; ++i) {
      log_g(i, l) = obs.log_density(y[l], obs.predict(particles(i, node)));
    }
  }

  int units = 1;
  if (granularity == WeightGranularity::PerNode) units = m;
  if (granularity == WeightGranularity::PerPatch) units = pou->patch_count;

  LocalWeights weights;
  weights.granularity = granularity;
  weights.log_unnormalised = Eigen::MatrixXd::Zero(units, p);
  weights.normalised.resize(units, p);

  for (int u = 0; u < units; ++u) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p);
    for (int l = 0; l < obs.num_obs; ++l) {
      double factor = 1.0;
      if (granularity == WeightGranularity::PerNode) {
        factor = loc_weight(loc, periodic_distance(mesh.position(u), obs.locations[l]));
      } else if (granularity == WeightGranularity::PerPatch) {
        factor = loc_weight(
            loc, patch_point_distance(pou->support[u], mesh, obs.locations[l]));
      }
      if (factor > 0.0) row += factor * log_g.col(l).transpose();
    }
    weights.log_unnormalised.row(u) = row;
    Eigen::RowVectorXd normalised(p);
    if (!normalise_row(row, normalised)) ++weights.degenerate_units;
    weights.normalised.row(u) = normalised;
  }
  return weights;
}

std::vector<int> resample_multinomial(const Eigen::VectorXd& weights, RngStream& stream) {
  const int p = static_cast<int>(weights.size());
  std::vector<int> ancestors(p);
  for (int i = 0; i < p; ++i) {
    const double u = stream.next_unit_halfopen();
    double acc = 0.0;
    int pick = p - 1;
    for (int q = 0; q < p; ++q) {
      acc += weights[q];
      if (u < acc) {
        pick = q;
        break;
      }
    }
    ancestors[i] = pick;
  }
  return ancestors;
}

std::vector<int> resample_systematic(const Eigen::VectorXd& weights, RngStream& stream) {
  const int p = static_cast<int>(weights.size());
  std::vector<int> ancestors(p);
  const double u = stream.next_unit_halfopen();
  double acc = weights[0];
  int q = 0;
  for (int i = 0; i < p; ++i) {
    const double point = (i + u) / p;
    while (point >= acc && q < p - 1) {
      ++q;
      acc += weights[q];
    }
    ancestors[i] = q;
  }
  return ancestors;
}

std::vector<std::vector<int>> resample_local_independent(const Eigen::MatrixXd& node_weights,
                                                         RngStream& stream) {
  const int m = static_cast<int>(node_weights.rows());
  std::vector<std::vector<int>> ancestors(m);
  for (int node = 0; node < m; ++node) {
    ancestors[node] = resample_multinomial(node_weights.row(node).transpose(), stream);
  }
  return ancestors;
}

void etpf_assimilate(Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                     const OtMethod& ot) {
  const int p = static_cast<int>(particles.rows());
  if (weights.size() != p) throw std::invalid_argument("etpf_assimilate: shape mismatch");
  if (p < 2) throw std::invalid_argument("etpf_assimilate: need at least two particles");
  if ((weights.array() - 1.0 / p).abs().maxCoeff() < 1e-15) return;  // identity plan

  TransportProblem problem;
  problem.target_weights = weights;
  // Pairwise squared Euclidean distances over all mesh nodes.
  const Eigen::MatrixXd gram = particles * particles.transpose();
  problem.cost.resize(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      problem.cost(i, j) = std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
    }
  }
  const TransportPlan plan = ot.kind == OtSolverKind::Exact
                                 ? solve_exact(problem)
                                 : solve_entropic(problem, ot.lambda, ot.sinkhorn);
  particles = (plan.coupling * particles).eval();
}

}  // namespace otlpf
