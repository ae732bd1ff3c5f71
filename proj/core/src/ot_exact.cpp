#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "otlpf/ot.hpp"

namespace otlpf {

namespace {

constexpr double kDropWeightTol = 1e-15;
constexpr double kWeightSumTol = 1e-6;

// Transportation-specialised network simplex. Sources carry supply 1, sinks
// carry demand P*w_q (zero-weight sinks removed by the caller). The basis is
// a spanning tree of the bipartite graph, seeded with the north-west corner
// rule.
//
// Entering arc: wrap-around block search over the arcs in row-major order,
// taking the most negative reduced cost within the first block that contains
// one (smallest arc index on ties). The scan position persists across
// pivots, so solves are bitwise deterministic. After a long run of
// degenerate pivots the rule switches to Bland's smallest-index rule, which
// cannot cycle, until a non-degenerate pivot occurs; this guarantees
// termination. Leaving arc: minimum flow on the backward cycle arcs,
// smallest arc index on ties.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& cost, const std::vector<int>& sink_cols,
                   const std::vector<double>& demands)
      : p_(static_cast<int>(cost.rows())),
        n_(static_cast<int>(sink_cols.size())),
        nodes_(p_ + n_) {
    cost_.resize(static_cast<std::size_t>(p_) * n_);
    for (int p = 0; p < p_; ++p) {
      for (int q = 0; q < n_; ++q) {
        cost_[static_cast<std::size_t>(p) * n_ + q] = cost(p, sink_cols[q]);
      }
    }
    double max_abs = 1.0;
    for (double c : cost_) max_abs = std::max(max_abs, std::abs(c));
    eps_ = 1e-14 * max_abs;
    block_size_ = std::max(64, static_cast<int>(std::sqrt(static_cast<double>(p_) * n_)));
    build_initial_basis(demands);
  }

  void run() {
    rebuild_tree();
    const long max_pivots = 256L * static_cast<long>(p_ + n_) * (p_ + n_) + 65536;
    long degenerate_streak = 0;
    for (long it = 0; it < max_pivots; ++it) {
      const bool bland = degenerate_streak > 2L * (p_ + n_);
      int ep = -1, eq = -1;
      if (!find_entering(bland, ep, eq)) return;  // optimal
      const double theta = pivot(ep, eq);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
      rebuild_tree();
    }
    throw std::runtime_error("solve_exact: pivot limit exceeded");
  }

  // Writes flows into the full-size plan using the original column indices.
  void extract(const std::vector<int>& sink_cols, Eigen::MatrixXd& coupling,
               std::vector<TransportPlan::Entry>& nonzeros) const {
    for (const Arc& arc : basis_) {
      if (arc.flow != 0.0) {
        const int col = sink_cols[arc.sink];
        coupling(arc.src, col) = arc.flow;
        nonzeros.push_back({arc.src, col, arc.flow});
      }
    }
  }

 private:
  struct Arc {
    int src;   // source index in [0, P)
    int sink;  // compact sink index in [0, n)
    double flow;
  };

  int sink_node(int q) const { return p_ + q; }

  // Row-minimum crossing-out rule: rows in index order, each allocating to
  // its cheapest still-active sink. Exactly one line is crossed out per cell
  // (both on the last), so the P+n-1 cells form a spanning-tree basis, like
  // the north-west corner rule but starting much closer to optimal.
  void build_initial_basis(const std::vector<double>& demands) {
    std::vector<double> supply(p_, 1.0);
    std::vector<double> demand = demands;
    std::vector<char> col_active(n_, 1);
    basis_.reserve(p_ + n_ - 1);
    int row = 0;
    int rows_active = p_;
    int cols_active = n_;
    while (true) {
      int q_best = -1;
      double c_best = std::numeric_limits<double>::infinity();
      const double* row_cost = cost_.data() + static_cast<std::size_t>(row) * n_;
      for (int q = 0; q < n_; ++q) {
        if (col_active[q] && row_cost[q] < c_best) {
          c_best = row_cost[q];
          q_best = q;
        }
      }
      const double theta = std::min(supply[row], demand[q_best]);
      basis_.push_back({row, q_best, theta});
      supply[row] -= theta;
      demand[q_best] -= theta;
      if (rows_active == 1 && cols_active == 1) break;
      if (supply[row] == 0.0 && rows_active > 1) {
        --rows_active;
        ++row;
      } else if (demand[q_best] == 0.0 && cols_active > 1) {
        col_active[q_best] = 0;
        --cols_active;
      } else {
        throw std::runtime_error("solve_exact: unbalanced initial allocation");
      }
    }
  }

  // Recomputes adjacency, parent structure and potentials from the basis.
  void rebuild_tree() {
    if (adjacency_.empty()) adjacency_.resize(nodes_);
    for (auto& list : adjacency_) list.clear();
    for (int i = 0; i < static_cast<int>(basis_.size()); ++i) {
      adjacency_[basis_[i].src].push_back(i);
      adjacency_[sink_node(basis_[i].sink)].push_back(i);
    }
    parent_.assign(nodes_, -1);
    parent_arc_.assign(nodes_, -1);
    potential_.assign(nodes_, 0.0);
    stack_.clear();
    stack_.push_back(0);
    seen_.assign(nodes_, 0);
    seen_[0] = 1;
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      for (int arc_idx : adjacency_[node]) {
        const Arc& arc = basis_[arc_idx];
        const int other = (arc.src == node) ? sink_node(arc.sink) : arc.src;
        if (seen_[other]) continue;
        seen_[other] = 1;
        parent_[other] = node;
        parent_arc_[other] = arc_idx;
        // Basic arcs satisfy u_src + v_sink = c.
        const double c = cost_[static_cast<std::size_t>(arc.src) * n_ + arc.sink];
        potential_[other] = c - potential_[node];
        stack_.push_back(other);
      }
    }
  }

  bool find_entering(bool bland, int& ep, int& eq) {
    const long arc_count = static_cast<long>(p_) * n_;
    const double* cost = cost_.data();
    const double* u = potential_.data();
    const double* v = potential_.data() + p_;

    if (bland) {
      for (long arc = 0; arc < arc_count; ++arc) {
        const int p = static_cast<int>(arc / n_);
        const int q = static_cast<int>(arc % n_);
        if (cost[arc] - u[p] - v[q] < -eps_) {
          ep = p;
          eq = q;
          return true;
        }
      }
      return false;
    }

    double best = -eps_;
    long best_arc = -1;
    long scanned = 0;
    long arc = next_arc_;
    int remaining_in_block = block_size_;
    while (scanned < arc_count) {
      const int p = static_cast<int>(arc / n_);
      const int q = static_cast<int>(arc % n_);
      const double rc = cost[arc] - u[p] - v[q];
      if (rc < best) {
        best = rc;
        best_arc = arc;
      }
      ++scanned;
      if (++arc == arc_count) arc = 0;
      if (--remaining_in_block == 0) {
        if (best_arc >= 0) break;
        remaining_in_block = block_size_;
      }
    }
    if (best_arc < 0) return false;
    next_arc_ = arc;
    ep = static_cast<int>(best_arc / n_);
    eq = static_cast<int>(best_arc % n_);
    return true;
  }

  // Applies the pivot for entering arc (ep, eq); returns the flow change.
  double pivot(int ep, int eq) {
    path_arcs_.clear();
    dir_forward_.clear();
    on_path_.assign(nodes_, 0);
    for (int v = ep; v != -1; v = parent_[v]) on_path_[v] = 1;
    int lca = sink_node(eq);
    while (!on_path_[lca]) lca = parent_[lca];

    // Cycle traversal: entering arc ep -> sink(eq), then the tree path
    // sink(eq) -> lca -> ep. Arcs traversed against their natural
    // source->sink direction lose theta, aligned arcs gain theta.
    for (int v = sink_node(eq); v != lca; v = parent_[v]) {
      const Arc& arc = basis_[parent_arc_[v]];
      const bool forward = sink_node(arc.sink) == parent_[v];
      path_arcs_.push_back(parent_arc_[v]);
      dir_forward_.push_back(forward);
    }
    for (int v = ep; v != lca; v = parent_[v]) {
      const Arc& arc = basis_[parent_arc_[v]];
      // traversal direction on the cycle is parent_[v] -> v here
      const bool forward = sink_node(arc.sink) == v;
      path_arcs_.push_back(parent_arc_[v]);
      dir_forward_.push_back(forward);
    }

    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    long leaving_id = -1;
    for (std::size_t i = 0; i < path_arcs_.size(); ++i) {
      if (dir_forward_[i]) continue;
      const Arc& arc = basis_[path_arcs_[i]];
      const long arc_id = static_cast<long>(arc.src) * n_ + arc.sink;
      if (arc.flow < theta || (arc.flow == theta && arc_id < leaving_id)) {
        theta = arc.flow;
        leaving = static_cast<int>(i);
        leaving_id = arc_id;
      }
    }
    if (leaving < 0) throw std::runtime_error("solve_exact: unbounded pivot");

    for (std::size_t i = 0; i < path_arcs_.size(); ++i) {
      basis_[path_arcs_[i]].flow += dir_forward_[i] ? theta : -theta;
    }
    basis_[path_arcs_[leaving]] = {ep, eq, theta};
    return theta;
  }

  int p_;
  int n_;
  int nodes_;
  double eps_;
  int block_size_;
  long next_arc_ = 0;
  std::vector<double> cost_;  // row-major compact copy
  std::vector<Arc> basis_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> parent_;
  std::vector<int> parent_arc_;
  std::vector<double> potential_;
  std::vector<int> path_arcs_;
  std::vector<char> dir_forward_;
  std::vector<char> on_path_;
  std::vector<int> stack_;
  std::vector<char> seen_;
};

void check_problem(const TransportProblem& problem) {
  const int p = problem.size();
  if (p < 1) throw std::invalid_argument("transport: empty problem");
  if (problem.cost.rows() != p || problem.cost.cols() != p) {
    throw std::invalid_argument("transport: cost matrix shape mismatch");
  }
  if (!problem.cost.allFinite()) {
    throw std::invalid_argument("transport: cost matrix must be finite");
  }
  if ((problem.cost.array() < 0.0).any()) {
    throw std::invalid_argument("transport: cost matrix must be nonnegative");
  }
  if ((problem.target_weights.array() < 0.0).any()) {
    throw std::invalid_argument("transport: negative target weight");
  }
  const double sum = problem.target_weights.sum();
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("transport: target weights must sum to 1");
  }
}

}  // namespace

TransportPlan solve_exact(const TransportProblem& problem) {
  check_problem(problem);
  const int p = problem.size();
  const Eigen::VectorXd w = problem.target_weights / problem.target_weights.sum();

  std::vector<int> sink_cols;
  sink_cols.reserve(p);
  for (int q = 0; q < p; ++q) {
    if (w[q] >= kDropWeightTol) sink_cols.push_back(q);
  }
  if (sink_cols.empty()) throw std::invalid_argument("transport: all weights zero");

  std::vector<double> demands(sink_cols.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sink_cols.size(); ++i) {
    demands[i] = p * w[sink_cols[i]];
    total += demands[i];
  }
  // Rebalance so supplies and demands match exactly; the discrepancy is at
  // most a few ulps plus the mass of the dropped columns.
  int largest = 0;
  for (std::size_t i = 1; i < demands.size(); ++i) {
    if (demands[i] > demands[largest]) largest = static_cast<int>(i);
  }
  demands[largest] += static_cast<double>(p) - total;

  TransportPlan plan;
  plan.solver = OtSolverKind::Exact;
  plan.coupling = Eigen::MatrixXd::Zero(p, p);

  TransportSimplex simplex(problem.cost, sink_cols, demands);
  simplex.run();
  simplex.extract(sink_cols, plan.coupling, plan.nonzeros);

  plan.nonzero_count = static_cast<int>(plan.nonzeros.size());
  double objective = 0.0;
  for (const auto& entry : plan.nonzeros) {
    objective += entry.value * problem.cost(entry.row, entry.col);
  }
  plan.objective = objective;
  return plan;
}

TransportPlan brute_force_uniform(const Eigen::MatrixXd& cost) {
  const int p = static_cast<int>(cost.rows());
  if (p < 1 || p > 8) throw std::invalid_argument("brute_force_uniform: require 1 <= P <= 8");
  if (cost.cols() != p) throw std::invalid_argument("brute_force_uniform: square cost required");

  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best_perm = perm;
  double best = std::numeric_limits<double>::infinity();
  do {
    double obj = 0.0;
    for (int i = 0; i < p; ++i) obj += cost(i, perm[i]);
    if (obj < best) {
      best = obj;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TransportPlan plan;
  plan.solver = OtSolverKind::Exact;
  plan.coupling = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    plan.coupling(i, best_perm[i]) = 1.0;
    plan.nonzeros.push_back({i, best_perm[i], 1.0});
  }
  plan.nonzero_count = p;
  plan.objective = best;
  return plan;
}

MarginalReport validate_plan(const TransportPlan& plan, const Eigen::VectorXd& weights) {
  MarginalReport report;
  const int p = static_cast<int>(plan.coupling.rows());
  const Eigen::VectorXd row_sums = plan.coupling.rowwise().sum();
  const Eigen::VectorXd col_sums = plan.coupling.colwise().sum();
  for (int i = 0; i < p; ++i) {
    report.max_row_error = std::max(report.max_row_error, std::abs(row_sums[i] - 1.0));
    report.max_col_error =
        std::max(report.max_col_error, std::abs(col_sums[i] - p * weights[i]));
  }
  return report;
}

}  // namespace otlpf
