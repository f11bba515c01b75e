#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfplan::conic {

enum class ConeType { NonNegative, SecondOrder, RotatedSecondOrder };

/// One block of auxiliary cone variables s = offset + coeffs * x.
/// NonNegative: every entry of s >= 0 (each row is its own cone).
/// SecondOrder: s0 >= ||s1..||.
/// RotatedSecondOrder: 2 * s0 * s1 >= ||s2..||^2 with s0, s1 >= 0.
struct ConeBlock {
  ConeType type = ConeType::NonNegative;
  Eigen::MatrixXd coeffs;
  Eigen::VectorXd offset;

  int rows() const { return static_cast<int>(coeffs.rows()); }
};

/// Language-neutral cone-program IR: minimize objective . x + objective_offset
/// subject to eq_coeffs * x = eq_rhs, every cone block membership, and
/// elementwise variable bounds. binary_vars marks variables the planner
/// branches on; the continuous solver ignores it.
struct ConicProblem {
  int num_vars = 0;
  Eigen::VectorXd objective;
  double objective_offset = 0.0;
  Eigen::MatrixXd eq_coeffs;  // 0 x num_vars when absent
  Eigen::VectorXd eq_rhs;
  std::vector<ConeBlock> cones;
  Eigen::VectorXd lower;  // -inf when free below
  Eigen::VectorXd upper;  // +inf when free above
  std::vector<int> binary_vars;

  static ConicProblem with_vars(int n) {
    ConicProblem p;
    p.num_vars = n;
    p.objective = Eigen::VectorXd::Zero(n);
    p.eq_coeffs = Eigen::MatrixXd::Zero(0, n);
    p.eq_rhs = Eigen::VectorXd::Zero(0);
    p.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    p.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    return p;
  }

  void add_equality(const Eigen::RowVectorXd& row, double rhs) {
    eq_coeffs.conservativeResize(eq_coeffs.rows() + 1, num_vars);
    eq_coeffs.row(eq_coeffs.rows() - 1) = row;
    eq_rhs.conservativeResize(eq_rhs.size() + 1);
    eq_rhs(eq_rhs.size() - 1) = rhs;
  }

  void add_cone(ConeType type, Eigen::MatrixXd coeffs, Eigen::VectorXd offset) {
    if (coeffs.rows() != offset.size() || coeffs.cols() != num_vars)
      throw std::invalid_argument("add_cone: inconsistent dimensions");
    int min_rows = type == ConeType::SecondOrder        ? 1
                   : type == ConeType::RotatedSecondOrder ? 2
                                                          : 1;
    if (coeffs.rows() < min_rows)
      throw std::invalid_argument("add_cone: block too small for its type");
    cones.push_back({type, std::move(coeffs), std::move(offset)});
  }

  /// Single orthant row: row . x + rhs_offset >= 0.
  void add_nonneg_row(const Eigen::RowVectorXd& row, double rhs_offset) {
    add_cone(ConeType::NonNegative, row, Eigen::VectorXd::Constant(1, rhs_offset));
  }

  int cone_rows() const {
    int total = 0;
    for (const auto& block : cones) total += block.rows();
    return total;
  }

  void check_consistent() const {
    if (objective.size() != num_vars || lower.size() != num_vars ||
        upper.size() != num_vars || eq_coeffs.cols() != num_vars ||
        eq_coeffs.rows() != eq_rhs.size())
      throw std::invalid_argument("ConicProblem: inconsistent dimensions");
    for (const auto& block : cones)
      if (block.coeffs.cols() != num_vars || block.coeffs.rows() != block.offset.size())
        throw std::invalid_argument("ConicProblem: inconsistent cone block");
    for (int v : binary_vars)
      if (v < 0 || v >= num_vars)
        throw std::invalid_argument("ConicProblem: binary marker out of range");
  }
};

/// Fixes a subset of variables to constants, folding their columns into the
/// offsets, and returns the shrunken problem. remaining[i] gives the original
/// index of the reduced problem's variable i.
struct SubstitutionResult {
  ConicProblem problem;
  std::vector<int> remaining;
};

inline SubstitutionResult substitute(const ConicProblem& src,
                                     const std::map<int, double>& fixed) {
  SubstitutionResult out;
  std::vector<int> new_index(src.num_vars, -1);
  for (int v = 0; v < src.num_vars; ++v) {
    if (fixed.count(v)) continue;
    new_index[v] = static_cast<int>(out.remaining.size());
    out.remaining.push_back(v);
  }
  const int n = static_cast<int>(out.remaining.size());
  ConicProblem& dst = out.problem;
  dst = ConicProblem::with_vars(n);
  dst.objective_offset = src.objective_offset;
  for (const auto& [v, value] : fixed) dst.objective_offset += src.objective(v) * value;
  for (int i = 0; i < n; ++i) {
    dst.objective(i) = src.objective(out.remaining[i]);
    dst.lower(i) = src.lower(out.remaining[i]);
    dst.upper(i) = src.upper(out.remaining[i]);
  }
  dst.eq_coeffs.resize(src.eq_coeffs.rows(), n);
  dst.eq_rhs = src.eq_rhs;
  for (int i = 0; i < n; ++i) dst.eq_coeffs.col(i) = src.eq_coeffs.col(out.remaining[i]);
  for (const auto& [v, value] : fixed) dst.eq_rhs -= src.eq_coeffs.col(v) * value;
  for (const auto& block : src.cones) {
    ConeBlock reduced;
    reduced.type = block.type;
    reduced.offset = block.offset;
    reduced.coeffs.resize(block.rows(), n);
    for (int i = 0; i < n; ++i) reduced.coeffs.col(i) = block.coeffs.col(out.remaining[i]);
    for (const auto& [v, value] : fixed) reduced.offset += block.coeffs.col(v) * value;
    dst.cones.push_back(std::move(reduced));
  }
  for (int v : src.binary_vars)
    if (new_index[v] >= 0) dst.binary_vars.push_back(new_index[v]);
  return out;
}

// --- plain-text dump/load for debugging failed nodes ---

inline void dump_problem(const ConicProblem& p, std::ostream& out) {
  out.precision(17);
  out << "conicproblem v1\n";
  out << "vars " << p.num_vars << '\n';
  out << "objective_offset " << p.objective_offset << '\n';
  out << "objective";
  for (int i = 0; i < p.num_vars; ++i) out << ' ' << p.objective(i);
  out << '\n';
  out << "equalities " << p.eq_coeffs.rows() << '\n';
  for (int r = 0; r < p.eq_coeffs.rows(); ++r) {
    out << "eq";
    for (int i = 0; i < p.num_vars; ++i) out << ' ' << p.eq_coeffs(r, i);
    out << " = " << p.eq_rhs(r) << '\n';
  }
  out << "bounds\n";
  for (int i = 0; i < p.num_vars; ++i) out << p.lower(i) << ' ' << p.upper(i) << '\n';
  out << "cones " << p.cones.size() << '\n';
  for (const auto& block : p.cones) {
    const char* name = block.type == ConeType::NonNegative      ? "nonneg"
                       : block.type == ConeType::SecondOrder    ? "soc"
                                                                : "rsoc";
    out << "cone " << name << ' ' << block.rows() << '\n';
    for (int r = 0; r < block.rows(); ++r) {
      out << "row";
      for (int i = 0; i < p.num_vars; ++i) out << ' ' << block.coeffs(r, i);
      out << " + " << block.offset(r) << '\n';
    }
  }
  out << "binaries";
  for (int v : p.binary_vars) out << ' ' << v;
  out << '\n';
}

inline void dump_problem(const ConicProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  dump_problem(p, out);
}

inline ConicProblem load_problem(std::istream& in) {
  auto expect = [&](const std::string& token) {
    std::string got;
    in >> got;
    if (got != token)
      throw std::runtime_error("problem parse: expected '" + token + "' got '" + got + "'");
  };
  expect("conicproblem");
  expect("v1");
  expect("vars");
  int n;
  in >> n;
  ConicProblem p = ConicProblem::with_vars(n);
  expect("objective_offset");
  in >> p.objective_offset;
  expect("objective");
  for (int i = 0; i < n; ++i) in >> p.objective(i);
  expect("equalities");
  int eq_count;
  in >> eq_count;
  p.eq_coeffs.resize(eq_count, n);
  p.eq_rhs.resize(eq_count);
  for (int r = 0; r < eq_count; ++r) {
    expect("eq");
    for (int i = 0; i < n; ++i) in >> p.eq_coeffs(r, i);
    expect("=");
    in >> p.eq_rhs(r);
  }
  expect("bounds");
  for (int i = 0; i < n; ++i) in >> p.lower(i) >> p.upper(i);
  expect("cones");
  int cone_count;
  in >> cone_count;
  for (int c = 0; c < cone_count; ++c) {
    expect("cone");
    std::string kind;
    int rows;
    in >> kind >> rows;
    ConeBlock block;
    block.type = kind == "nonneg" ? ConeType::NonNegative
                 : kind == "soc" ? ConeType::SecondOrder
                 : kind == "rsoc"
                     ? ConeType::RotatedSecondOrder
                     : throw std::runtime_error("problem parse: bad cone '" + kind + "'");
    block.coeffs.resize(rows, n);
    block.offset.resize(rows);
    for (int r = 0; r < rows; ++r) {
      expect("row");
      for (int i = 0; i < n; ++i) in >> block.coeffs(r, i);
      expect("+");
      in >> block.offset(r);
    }
    p.cones.push_back(std::move(block));
  }
  expect("binaries");
  std::string rest;
  std::getline(in, rest);
  std::istringstream tail(rest);
  int v;
  while (tail >> v) p.binary_vars.push_back(v);
  p.check_consistent();
  return p;
}

inline ConicProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_problem(in);
}

}  // namespace cfplan::conic
