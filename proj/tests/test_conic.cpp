#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>

#include "cfplan/conic/problem.hpp"
#include "cfplan/conic/solver.hpp"
#include "cfplan/rng.hpp"

using namespace cfplan;
using namespace cfplan::conic;
using Catch::Approx;

TEST_CASE("orthant toy: min x subject to x >= 3", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(1);
  p.objective(0) = 1.0;
  p.lower(0) = 3.0;
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(0) == Approx(3.0).epsilon(1e-7));
  CHECK(sol.objective == Approx(3.0).epsilon(1e-7));
  CHECK(check_certificate(p, sol).valid);
}

TEST_CASE("analytic second-order cone family", "[conic]") {
  for (auto [u, v] : {std::pair{3.0, 4.0}, {1.0, 0.0}, {-5.0, 12.0}, {0.3, -0.4}}) {
    ConicProblem p = ConicProblem::with_vars(1);
    p.objective(0) = 1.0;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 1);
    f(0, 0) = 1.0;
    Eigen::VectorXd g(3);
    g << 0.0, u, v;
    p.add_cone(ConeType::SecondOrder, f, g);
    ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    double expected = std::hypot(u, v);
    CHECK(sol.x(0) == Approx(expected).margin(1e-7));
    CHECK(sol.primal_residual <= 1e-8);
    CHECK(sol.dual_residual <= 1e-8);
    CHECK(sol.rel_gap <= 1e-8);
    CHECK(check_certificate(p, sol).valid);
  }
}

TEST_CASE("rotated cone epigraph: min s+t with 2st >= 1", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(2);
  p.objective << 1.0, 1.0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 2);
  f(0, 0) = 1.0;
  f(1, 1) = 1.0;
  Eigen::VectorXd g(3);
  g << 0.0, 0.0, 1.0;
  p.add_cone(ConeType::RotatedSecondOrder, f, g);
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == Approx(std::sqrt(2.0)).epsilon(1e-7));
  CHECK(sol.x(0) == Approx(M_SQRT1_2).epsilon(1e-6));
  CHECK(sol.x(1) == Approx(M_SQRT1_2).epsilon(1e-6));
}

TEST_CASE("equalities combine with bounds", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(2);
  p.objective << 1.0, 2.0;
  Eigen::RowVectorXd row(2);
  row << 1.0, 1.0;
  p.add_equality(row, 1.0);
  p.lower.setZero();
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == Approx(1.0).epsilon(1e-7));
  CHECK(sol.x(0) == Approx(1.0).margin(1e-6));
  CHECK(sol.x(1) == Approx(0.0).margin(1e-6));
}

TEST_CASE("infeasible toy yields a validated certificate", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(1);
  p.objective(0) = 1.0;
  p.lower(0) = 1.0;
  p.upper(0) = 0.0;
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Infeasible);
  CHECK(check_certificate(p, sol).valid);
}

TEST_CASE("unbounded direction is certified", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(1);
  p.objective(0) = 1.0;
  p.upper(0) = 0.0;
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Unbounded);
  CHECK(check_certificate(p, sol).valid);
}

namespace {

/// Builds a random SOCP whose optimum is known by construction: pick a primal
/// point and complementary duals per cone block, then derive c from
/// stationarity. Returns the problem and its optimal value.
std::pair<ConicProblem, double> kkt_constructed_instance(Rng& rng, int n, int p_eq,
                                                         int orthant_rows,
                                                         int soc_blocks) {
  ConicProblem prob = ConicProblem::with_vars(n);
  Eigen::VectorXd x_star(n);
  for (int i = 0; i < n; ++i) x_star(i) = rng.uniform(-1, 1);

  Eigen::VectorXd c_accum = Eigen::VectorXd::Zero(n);

  if (orthant_rows > 0) {
    Eigen::MatrixXd f(orthant_rows, n);
    Eigen::VectorXd s(orthant_rows), z(orthant_rows), g(orthant_rows);
    for (int r = 0; r < orthant_rows; ++r) {
      for (int i = 0; i < n; ++i) f(r, i) = rng.uniform(-1, 1);
      if (rng.uniform() < 0.5) {  // inactive row
        s(r) = 0.3 + rng.uniform();
        z(r) = 0.0;
      } else {  // active row
        s(r) = 0.0;
        z(r) = 0.3 + rng.uniform();
      }
    }
    g = s - f * x_star;
    prob.add_cone(ConeType::NonNegative, f, g);
    c_accum += f.transpose() * z;
  }

  for (int blk = 0; blk < soc_blocks; ++blk) {
    int dim = 3 + static_cast<int>(rng.next_u64() % 3);
    Eigen::MatrixXd f(dim, n);
    for (int r = 0; r < dim; ++r)
      for (int i = 0; i < n; ++i) f(r, i) = rng.uniform(-1, 1);
    Eigen::VectorXd s(dim), z(dim);
    double mode = rng.uniform();
    if (mode < 0.4) {  // strictly complementary boundary pair
      for (int r = 1; r < dim; ++r) s(r) = rng.uniform(-1, 1);
      s(0) = s.tail(dim - 1).norm();
      double mu = 0.5 + rng.uniform();
      z(0) = mu * s(0);
      z.tail(dim - 1) = -mu * s.tail(dim - 1);
      if (s(0) == 0.0) {  // degenerate draw, make it inactive instead
        s(0) = 1.0;
        z.setZero();
      }
    } else if (mode < 0.7) {  // slack interior, constraint inactive
      for (int r = 1; r < dim; ++r) s(r) = rng.uniform(-1, 1);
      s(0) = s.tail(dim - 1).norm() + 0.5 + rng.uniform();
      z.setZero();
    } else {  // dual interior, slack at the origin
      s.setZero();
      for (int r = 1; r < dim; ++r) z(r) = rng.uniform(-1, 1);
      z(0) = z.tail(dim - 1).norm() + 0.5 + rng.uniform();
    }
    Eigen::VectorXd g = s - f * x_star;
    prob.add_cone(ConeType::SecondOrder, f, g);
    c_accum += f.transpose() * z;
  }

  if (p_eq > 0) {
    Eigen::MatrixXd a(p_eq, n);
    Eigen::VectorXd y(p_eq);
    for (int r = 0; r < p_eq; ++r) {
      for (int i = 0; i < n; ++i) a(r, i) = rng.uniform(-1, 1);
      y(r) = rng.uniform(-1, 1);
    }
    prob.eq_coeffs = a;
    prob.eq_rhs = a * x_star;
    c_accum -= a.transpose() * y;
  }

  prob.objective = c_accum;
  return {prob, c_accum.dot(x_star)};
}

}  // namespace

TEST_CASE("random SOCPs with constructed optima are recovered", "[conic]") {
  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 4 + static_cast<int>(rng.next_u64() % 6);
    int p_eq = static_cast<int>(rng.next_u64() % 3);
    auto [prob, expected] = kkt_constructed_instance(rng, n, p_eq, 6, 2);
    ConicSolution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == Approx(expected).epsilon(1e-6).margin(1e-6));
    CHECK(check_certificate(prob, sol).valid);

    // weak duality on the reported solution
    StandardForm sf = to_standard_form(prob);
    Eigen::VectorXd h_unscaled = sf.h.cwiseQuotient(sf.row_scale);
    double dual_obj = -h_unscaled.dot(sol.cone_dual);
    if (prob.eq_coeffs.rows() > 0) dual_obj -= prob.eq_rhs.dot(sol.eq_dual);
    CHECK(sol.objective >= dual_obj - 1e-6 * std::max(1.0, std::abs(sol.objective)));
  }
}

TEST_CASE("argmin is invariant to positive objective scaling", "[conic]") {
  Rng rng(7);
  auto [prob, expected] = kkt_constructed_instance(rng, 6, 2, 5, 1);
  ConicSolution base = solve(prob);
  ConicProblem scaled = prob;
  scaled.objective *= 37.5;
  ConicSolution big = solve(scaled);
  REQUIRE(base.status == SolveStatus::Optimal);
  REQUIRE(big.status == SolveStatus::Optimal);
  CHECK((base.x - big.x).norm() < 1e-5 * (1.0 + base.x.norm()));
  CHECK(big.objective == Approx(37.5 * expected).epsilon(1e-5));
}

TEST_CASE("solves are deterministic", "[conic]") {
  Rng rng(99);
  auto [prob, expected] = kkt_constructed_instance(rng, 7, 1, 6, 2);
  (void)expected;
  ConicSolution a = solve(prob);
  ConicSolution b = solve(prob);
  REQUIRE(a.status == b.status);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("substitution folds fixed variables into constants", "[conic]") {
  // min x0 + x1 s.t. x0 + x1 >= 2, x0, x1 in [0, 5]
  ConicProblem p = ConicProblem::with_vars(2);
  p.objective << 1.0, 1.0;
  Eigen::RowVectorXd row(2);
  row << 1.0, 1.0;
  p.add_nonneg_row(row, -2.0);
  p.lower.setZero();
  p.upper.setConstant(5.0);
  p.binary_vars = {0};

  auto reduced = substitute(p, {{0, 1.5}});
  CHECK(reduced.problem.num_vars == 1);
  CHECK(reduced.remaining == std::vector<int>{1});
  CHECK(reduced.problem.binary_vars.empty());
  CHECK(reduced.problem.objective_offset == Approx(1.5));
  ConicSolution sol = solve(reduced.problem);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == Approx(2.0).epsilon(1e-7));  // 1.5 + 0.5
  CHECK(sol.x(0) == Approx(0.5).margin(1e-6));
}

TEST_CASE("problems round-trip through the text dump", "[conic]") {
  Rng rng(55);
  auto [prob, expected] = kkt_constructed_instance(rng, 5, 1, 4, 1);
  prob.binary_vars = {0, 2};
  std::stringstream buffer;
  dump_problem(prob, buffer);
  ConicProblem back = load_problem(buffer);
  CHECK(back.num_vars == prob.num_vars);
  CHECK(back.objective == prob.objective);
  CHECK(back.eq_coeffs == prob.eq_coeffs);
  CHECK(back.eq_rhs == prob.eq_rhs);
  CHECK(back.binary_vars == prob.binary_vars);
  REQUIRE(back.cones.size() == prob.cones.size());
  for (std::size_t i = 0; i < back.cones.size(); ++i) {
    CHECK(back.cones[i].type == prob.cones[i].type);
    CHECK(back.cones[i].coeffs == prob.cones[i].coeffs);
    CHECK(back.cones[i].offset == prob.cones[i].offset);
  }
  ConicSolution a = solve(prob), b = solve(back);
  CHECK(a.objective == b.objective);
  (void)expected;
}

TEST_CASE("perturbed solutions are flagged by the certificate check", "[conic]") {
  ConicProblem p = ConicProblem::with_vars(1);
  p.objective(0) = 1.0;
  p.lower(0) = 3.0;
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  ConicSolution bad = sol;
  bad.x(0) -= 1e-3;  // violates the bound
  CHECK_FALSE(check_certificate(p, bad).valid);
}
