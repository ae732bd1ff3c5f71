#include <cmath>
#include <memory>

#include "otlpf/filters.hpp"
#include "otlpf/mesh.hpp"
#include "otlpf/thread_pool.hpp"

namespace otlpf {

namespace {

// Per-patch transport plan stored sparsely for exact solves; entropic plans
// stay dense.
struct PatchPlan {
  bool identity = true;
  std::vector<TransportPlan::Entry> entries;  // exact plans
  Eigen::MatrixXd dense;                      // entropic plans
  bool use_dense = false;
};

void apply_plan_to_column(const PatchPlan& plan, const Eigen::VectorXd& column,
                          Eigen::VectorXd& out) {
  if (plan.identity) {
    out = column;
    return;
  }
  if (plan.use_dense) {
    out.noalias() = plan.dense * column;
    return;
  }
  out.setZero();
  for (const auto& entry : plan.entries) {
    out[entry.row] += entry.value * column[entry.col];
  }
}

}  // namespace

void sletpf_assimilate(Eigen::MatrixXd& particles, const PartitionOfUnity& pou,
                       const ObservationModel& obs, const Eigen::VectorXd& y,
                       const LocalisationSpec& loc, const OtMethod& ot,
                       SletpfStats* stats) {
  const int p = static_cast<int>(particles.rows());
  const int m = static_cast<int>(particles.cols());
  const int b_count = pou.patch_count;
  if (pou.node_count != m) throw std::invalid_argument("sletpf_assimilate: PoU mesh mismatch");
  if (p < 2) throw std::invalid_argument("sletpf_assimilate: need at least two particles");

  // Per-patch weights from the patch-to-observation localisation.
  const LocalWeights weights =
      compute_local_weights(particles, obs, y, WeightGranularity::PerPatch, loc, &pou);
  if (stats) stats->degenerate_weight_units += weights.degenerate_units;

  // One OT problem per patch; solves are independent and run on the pool.
  std::vector<PatchPlan> plans(b_count);
  ThreadPool::global().parallel_for(0, b_count, [&](int b) {
    const Eigen::VectorXd w = weights.normalised.row(b).transpose();
    if ((w.array() - 1.0 / p).abs().maxCoeff() < 1e-15) {
      plans[b].identity = true;  // uniform weights: identity is optimal
      return;
    }
    TransportProblem problem;
    problem.target_weights = w;
    problem.cost = Eigen::MatrixXd::Zero(p, p);
    // Squared differences accumulated over the subsampled support nodes
    // (uniform cost localisation with zero radius).
    for (int node : pou.support_subsampled[b]) {
      const Eigen::VectorXd col = particles.col(node);
      for (int i = 0; i < p; ++i) {
        const double xi = col[i];
        for (int j = i + 1; j < p; ++j) {
          const double diff = xi - col[j];
          const double sq = diff * diff;
          problem.cost(i, j) += sq;
          problem.cost(j, i) += sq;
        }
      }
    }
    try {
      if (ot.kind == OtSolverKind::Exact) {
        TransportPlan plan = solve_exact(problem);
        plans[b].identity = false;
        plans[b].use_dense = false;
        plans[b].entries = std::move(plan.nonzeros);
      } else {
        TransportPlan plan = solve_entropic(problem, ot.lambda, ot.sinkhorn);
        plans[b].identity = false;
        plans[b].use_dense = true;
        plans[b].dense = std::move(plan.coupling);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("sletpf_assimilate: OT solve failed for patch " +
                               std::to_string(b) + ": " + e.what());
    }
  });
  if (stats) {
    for (const auto& plan : plans) {
      if (plan.identity) ++stats->identity_fast_path;
    }
    if (stats->capture_plans) {
      stats->capture_plans->clear();
      for (const auto& plan : plans) {
        Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(p, p);
        if (!plan.identity) {
          if (plan.use_dense) {
            dense = plan.dense;
          } else {
            dense.setZero();
            for (const auto& entry : plan.entries) dense(entry.row, entry.col) = entry.value;
          }
        }
        stats->capture_plans->push_back(std::move(dense));
      }
    }
  }

  // Node update: new column = sum over covering patches of
  // phi_b(node) * (plan_b * old column). Patch order within a node is fixed
  // (ascending b) so summation order is deterministic.
  Eigen::MatrixXd updated(p, m);
  ThreadPool::global().parallel_for(0, m, [&](int node) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd transformed(p);
    const Eigen::VectorXd column = particles.col(node);
    for (int b : pou.covering[node]) {
      apply_plan_to_column(plans[b], column, transformed);
      acc += pou.bump(b, node) * transformed;
    }
    updated.col(node) = acc;
  });
  particles.swap(updated);
}

}  // namespace otlpf
