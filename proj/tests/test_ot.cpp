#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "otlpf/ot.hpp"
#include "otlpf/rng.hpp"

using otlpf::brute_force_uniform;
using otlpf::solve_entropic;
using otlpf::solve_exact;
using otlpf::TransportPlan;
using otlpf::TransportProblem;
using otlpf::validate_plan;

namespace {

Eigen::MatrixXd random_cost(int p, otlpf::RngStream& stream) {
  Eigen::MatrixXd cost(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) cost(i, j) = stream.next_unit_halfopen();
  }
  return cost;
}

Eigen::VectorXd random_weights(int p, otlpf::RngStream& stream) {
  Eigen::VectorXd w(p);
  for (int i = 0; i < p; ++i) w[i] = std::exp(stream.next_normal());
  return w / w.sum();
}

Eigen::VectorXd uniform_weights(int p) {
  return Eigen::VectorXd::Constant(p, 1.0 / p);
}

}  // namespace

TEST_CASE("exact solver returns the identity for uniform weights and zero diagonal") {
  otlpf::RngStream stream(11);
  const int p = 7;
  TransportProblem problem;
  problem.target_weights = uniform_weights(p);
  problem.cost = random_cost(p, stream);
  problem.cost.diagonal().setZero();
  const TransportPlan plan = solve_exact(problem);
  CHECK((plan.coupling - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(plan.objective == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("exact solver handles a zero-weight column") {
  TransportProblem problem;
  problem.target_weights = Eigen::VectorXd::Zero(2);
  problem.target_weights[0] = 1.0;
  problem.cost.setConstant(2, 2, 0.5);
  problem.cost(0, 0) = 0.1;
  const TransportPlan plan = solve_exact(problem);
  CHECK(plan.coupling(0, 0) == doctest::Approx(1.0));
  CHECK(plan.coupling(1, 0) == doctest::Approx(1.0));
  CHECK(plan.coupling(0, 1) == 0.0);
  CHECK(plan.coupling(1, 1) == 0.0);
}

TEST_CASE("exact objective matches brute-force permutation minimum") {
  otlpf::RngStream stream(101);
  for (int p = 3; p <= 6; ++p) {
    for (int instance = 0; instance < 100; ++instance) {
      TransportProblem problem;
      problem.target_weights = uniform_weights(p);
      problem.cost = random_cost(p, stream);
      const TransportPlan exact = solve_exact(problem);
      const TransportPlan brute = brute_force_uniform(problem.cost);
      CHECK(exact.objective == doctest::Approx(brute.objective).epsilon(1e-12));
      const auto report = validate_plan(exact, problem.target_weights);
      CHECK(report.max_row_error < 1e-12);
      CHECK(report.max_col_error < 1e-12);
    }
  }
}

TEST_CASE("exact plans are sparse and deterministic on generic weights") {
  otlpf::RngStream stream(202);
  for (int instance = 0; instance < 100; ++instance) {
    const int p = 5 + instance % 20;
    TransportProblem problem;
    problem.target_weights = random_weights(p, stream);
    problem.cost = random_cost(p, stream);
    const TransportPlan plan = solve_exact(problem);
    CHECK(plan.nonzero_count <= 2 * p - 1);
    const auto report = validate_plan(plan, problem.target_weights);
    CHECK(report.max_row_error < 1e-12);
    CHECK(report.max_col_error < 1e-12);
    const TransportPlan again = solve_exact(problem);
    CHECK((plan.coupling - again.coupling).cwiseAbs().maxCoeff() == 0.0);
    CHECK(plan.objective == again.objective);
  }
}

TEST_CASE("exact plan support is invariant under positive cost scalings") {
  otlpf::RngStream stream(303);
  TransportProblem problem;
  const int p = 12;
  problem.target_weights = random_weights(p, stream);
  problem.cost = random_cost(p, stream);
  const TransportPlan base = solve_exact(problem);
  TransportProblem scaled = problem;
  scaled.cost *= 37.5;
  const TransportPlan plan = solve_exact(scaled);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      CHECK((base.coupling(i, j) > 0) == (plan.coupling(i, j) > 0));
    }
  }
}

TEST_CASE("exact solver rejects invalid input") {
  TransportProblem problem;
  problem.target_weights = uniform_weights(3);
  problem.cost.setConstant(3, 3, 1.0);
  problem.cost(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_exact(problem), std::invalid_argument);
  problem.cost.setConstant(3, 3, 1.0);
  problem.target_weights[0] = -0.1;
  problem.target_weights[1] = 0.6;
  problem.target_weights[2] = 0.5;
  CHECK_THROWS_AS(solve_exact(problem), std::invalid_argument);
  problem.target_weights.setConstant(0.5);  // sums to 1.5
  CHECK_THROWS_AS(solve_exact(problem), std::invalid_argument);
}

TEST_CASE("brute force oracle basics") {
  CHECK(brute_force_uniform(Eigen::MatrixXd::Zero(1, 1)).coupling(0, 0) == 1.0);

  Eigen::MatrixXd swap_cost(2, 2);
  swap_cost << 0.0, 1.0, 1.0, 0.0;
  const TransportPlan two = brute_force_uniform(swap_cost);
  CHECK(two.objective == 0.0);
  CHECK(two.coupling(0, 0) == 1.0);
  CHECK(two.coupling(1, 1) == 1.0);

  // 1-D points with squared distance costs: the monotone assignment wins.
  Eigen::VectorXd points(3);
  points << -1.0, 0.2, 2.0;
  Eigen::MatrixXd cost(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) cost(i, j) = (points[i] - points[j]) * (points[i] - points[j]);
  }
  const TransportPlan monotone = brute_force_uniform(cost);
  CHECK(monotone.coupling.diagonal().minCoeff() == 1.0);
  CHECK_THROWS_AS(brute_force_uniform(Eigen::MatrixXd::Zero(9, 9)), std::invalid_argument);
}

TEST_CASE("validate_plan reports marginal violations") {
  TransportProblem problem;
  const int p = 4;
  otlpf::RngStream stream(404);
  problem.target_weights = random_weights(p, stream);
  problem.cost = random_cost(p, stream);
  TransportPlan plan = solve_exact(problem);
  auto clean = validate_plan(plan, problem.target_weights);
  CHECK(clean.max_row_error < 1e-12);
  CHECK(clean.max_col_error < 1e-12);

  // The standard PF resampling plan rho(p, q) = w_q is feasible.
  TransportPlan standard;
  standard.coupling = problem.target_weights.transpose().replicate(p, 1);
  auto standard_report = validate_plan(standard, problem.target_weights);
  CHECK(standard_report.max_row_error < 1e-12);
  CHECK(standard_report.max_col_error < 1e-12);

  plan.coupling(2, 1) += 1e-6;
  auto perturbed = validate_plan(plan, problem.target_weights);
  CHECK(perturbed.max_row_error == doctest::Approx(1e-6).epsilon(1e-6));
}

TEST_CASE("entropic plan tends to the weight rows as lambda grows") {
  otlpf::RngStream stream(505);
  const int p = 20;
  TransportProblem problem;
  problem.target_weights = random_weights(p, stream);
  problem.cost = random_cost(p, stream);
  const double lambda = 1000.0 * problem.cost.maxCoeff();
  const TransportPlan plan = solve_entropic(problem, lambda);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      CHECK(plan.coupling(i, j) ==
            doctest::Approx(problem.target_weights[j]).epsilon(1e-3));
    }
  }
}

TEST_CASE("entropic marginals, monotonicity and closeness to the exact objective") {
  otlpf::RngStream stream(606);
  for (int instance = 0; instance < 5; ++instance) {
    const int p = 30;
    TransportProblem problem;
    problem.target_weights = random_weights(p, stream);
    problem.cost = random_cost(p, stream);
    const TransportPlan exact = solve_exact(problem);

    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-1, 1e-2, 1e-3}) {
      const TransportPlan plan = solve_entropic(problem, lambda);
      const auto report = validate_plan(plan, problem.target_weights);
      CHECK(report.max_row_error <= 1e-9);
      CHECK(report.max_col_error <= 1e-9);
      CHECK(plan.objective <= previous + 1e-12);
      CHECK(plan.objective >= exact.objective - 1e-9);
      previous = plan.objective;
    }
    CHECK(previous <= exact.objective * 1.05 + 1e-9);
  }
}

TEST_CASE("entropic smoothing keeps off-diagonal mass on uniform weights") {
  otlpf::RngStream stream(707);
  const int p = 15;
  TransportProblem problem;
  problem.target_weights = uniform_weights(p);
  problem.cost = random_cost(p, stream);
  problem.cost.diagonal().setZero();
  // Uniform marginals with a vertex optimum converge sublinearly; a looser
  // marginal tolerance is plenty for inspecting the plan structure.
  otlpf::SinkhornOptions options;
  options.tol = 1e-5;
  options.max_iter = 500000;
  const TransportPlan plan = solve_entropic(problem, 1e-2, options);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      CHECK(plan.coupling(i, j) > 0.0);
      if (i != j) CHECK(plan.coupling(i, i) > plan.coupling(i, j));
    }
  }
}

TEST_CASE("entropic solver reports non-convergence with the last marginal error") {
  otlpf::RngStream stream(808);
  TransportProblem problem;
  const int p = 40;
  problem.target_weights = random_weights(p, stream);
  problem.cost = random_cost(p, stream);
  otlpf::SinkhornOptions options;
  options.max_iter = 2;
  options.tol = 1e-12;
  try {
    solve_entropic(problem, 1e-3, options);
    FAIL("expected SinkhornError");
  } catch (const otlpf::SinkhornError& e) {
    CHECK(e.marginal_error > 0.0);
    CHECK(e.iterations == 2);
  }
  CHECK_THROWS_AS(solve_entropic(problem, 0.0), std::invalid_argument);
}
