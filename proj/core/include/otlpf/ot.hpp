#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

namespace otlpf {

// Discrete transport problem between the uniform measure on P particles and a
// weighted target measure. Feasible couplings have row sums 1 and column sums
// P * w_q, total mass P.
struct TransportProblem {
  Eigen::VectorXd target_weights;  // length P, >= 0, sums to 1
  Eigen::MatrixXd cost;            // P x P, finite, >= 0

  int size() const { return static_cast<int>(target_weights.size()); }
};

enum class OtSolverKind { Exact, Entropic };

struct TransportPlan {
  Eigen::MatrixXd coupling;  // P x P, row sums 1, column sums P*w_q
  double objective = 0.0;    // sum coupling .* cost
  // Transport term plus lambda * sum rho (log rho - 1); NaN for exact plans.
  double regularised_objective = std::numeric_limits<double>::quiet_NaN();
  OtSolverKind solver = OtSolverKind::Exact;
  int nonzero_count = 0;

  struct Entry {
    int row;
    int col;
    double value;
  };
  // Strictly positive entries; populated for exact plans (at most 2P-1).
  std::vector<Entry> nonzeros;
};

// Exact solution via the network simplex on the bipartite transportation
// graph. Deterministic: fixed pivot rule and tie-breaking, bitwise
// reproducible for identical inputs. Columns with weight below 1e-15 are
// removed before solving and reinstated as zero columns.
TransportPlan solve_exact(const TransportProblem& problem);

struct SinkhornOptions {
  double tol = 1e-9;    // infinity-norm marginal error at convergence
  int max_iter = 10000;
};

class SinkhornError : public std::runtime_error {
 public:
  SinkhornError(const std::string& what, double marginal_error, int iterations)
      : std::runtime_error(what), marginal_error(marginal_error), iterations(iterations) {}
  double marginal_error;
  int iterations;
};

// Entropically regularised solution via log-domain Sinkhorn-Knopp iteration
// with per-row/column max-stabilisation. Throws SinkhornError carrying the
// last marginal error if max_iter is exhausted.
TransportPlan solve_entropic(const TransportProblem& problem, double lambda,
                             const SinkhornOptions& options = {});

// Test oracle: enumerates all P! permutations for uniform target weights and
// returns the cheapest as a plan (P <= 8).
TransportPlan brute_force_uniform(const Eigen::MatrixXd& cost);

struct MarginalReport {
  double max_row_error = 0.0;  // max |row sum - 1|
  double max_col_error = 0.0;  // max |col sum - P*w_q|
};
MarginalReport validate_plan(const TransportPlan& plan, const Eigen::VectorXd& weights);

}  // namespace otlpf
