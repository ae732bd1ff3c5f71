#include <cmath>
#include <limits>
#include <vector>

#include "otlpf/ot.hpp"

namespace otlpf {

namespace {
constexpr double kDropWeightTol = 1e-15;
constexpr double kWeightSumTol = 1e-6;
}  // namespace

TransportPlan solve_entropic(const TransportProblem& problem, double lambda,
                             const SinkhornOptions& options) {
  if (lambda <= 0.0) throw std::invalid_argument("solve_entropic: lambda must be > 0");
  const int p = problem.size();
  if (p < 1) throw std::invalid_argument("solve_entropic: empty problem");
  if (problem.cost.rows() != p || problem.cost.cols() != p) {
    throw std::invalid_argument("solve_entropic: cost matrix shape mismatch");
  }
  if (!problem.cost.allFinite()) {
    throw std::invalid_argument("solve_entropic: cost matrix must be finite");
  }
  if ((problem.target_weights.array() < 0.0).any()) {
    throw std::invalid_argument("solve_entropic: negative target weight");
  }
  const double sum = problem.target_weights.sum();
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("solve_entropic: target weights must sum to 1");
  }
  const Eigen::VectorXd w = problem.target_weights / sum;

  std::vector<int> cols;
  cols.reserve(p);
  for (int q = 0; q < p; ++q) {
    if (w[q] >= kDropWeightTol) cols.push_back(q);
  }
  const int n = static_cast<int>(cols.size());
  if (n == 0) throw std::invalid_argument("solve_entropic: all weights zero");

  // Gibbs kernel exponents, stored in both orientations for cache friendly
  // column and row sweeps.
  Eigen::MatrixXd kernel(p, n);       // K(p, q) = -c / lambda
  Eigen::MatrixXd kernel_t(n, p);
  Eigen::VectorXd log_b(n);
  for (int j = 0; j < n; ++j) {
    const int q = cols[j];
    log_b[j] = std::log(static_cast<double>(p) * w[q]);
    for (int i = 0; i < p; ++i) {
      kernel(i, j) = -problem.cost(i, q) / lambda;
      kernel_t(j, i) = kernel(i, j);
    }
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p);  // row potentials / lambda
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);  // column potentials / lambda
  Eigen::VectorXd col_lse(n), row_lse(p), col_max(n), row_max(p);
  Eigen::MatrixXd work(p, n), work_t(n, p);

  double marginal_error = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < options.max_iter; ++it) {
    iterations = it + 1;
    // Column log-sums under the current phi.
    work = kernel.colwise() + phi;
    col_max = work.colwise().maxCoeff().transpose();
    col_lse = ((work.rowwise() - col_max.transpose()).array().exp().colwise().sum())
                  .log()
                  .transpose()
                  .matrix() +
              col_max;
    if (it > 0) {
      // Rows are exact after the previous phi update; columns carry the error.
      const double err =
          ((psi + col_lse).array().exp() - log_b.array().exp()).abs().maxCoeff();
      marginal_error = err;
      if (err <= options.tol) {
        converged = true;
        break;
      }
    }
    psi = log_b - col_lse;
    work_t = kernel_t.colwise() + psi;
    row_max = work_t.colwise().maxCoeff().transpose();
    row_lse = ((work_t.rowwise() - row_max.transpose()).array().exp().colwise().sum())
                  .log()
                  .transpose()
                  .matrix() +
              row_max;
    phi = -row_lse;
  }
  if (!converged) {
    throw SinkhornError("solve_entropic: Sinkhorn iteration did not reach the "
                        "marginal tolerance",
                        marginal_error, iterations);
  }

  TransportPlan plan;
  plan.solver = OtSolverKind::Entropic;
  plan.coupling = Eigen::MatrixXd::Zero(p, p);
  double objective = 0.0;
  double entropy_term = 0.0;
  int nonzero = 0;
  for (int j = 0; j < n; ++j) {
    const int q = cols[j];
    for (int i = 0; i < p; ++i) {
      const double value = std::exp(phi[i] + psi[j] + kernel(i, j));
      plan.coupling(i, q) = value;
      if (value > 0.0) {
        ++nonzero;
        objective += value * problem.cost(i, q);
        entropy_term += value * (std::log(value) - 1.0);
      }
    }
  }
  plan.nonzero_count = nonzero;
  plan.objective = objective;
  plan.regularised_objective = objective + lambda * entropy_term;
  return plan;
}

}  // namespace otlpf
