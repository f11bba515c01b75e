#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfplan/conic/problem.hpp"

namespace cfplan::conic {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    default: return "NumericalFailure";
  }
}

struct SolverSettings {
  double tol = 1e-8;         // feasibility and relative-gap target
  double tol_infeas = 1e-8;  // certificate residual target
  int max_iters = 200;
  double step_fraction = 0.99;
  double static_reg = 1e-11;  // diagonal regularization of the reduced KKT
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;          // primal in IR variable space
  Eigen::VectorXd eq_dual;    // y for the equality rows
  Eigen::VectorXd cone_dual;  // z in standard-form row order (see StandardForm)
  double objective = 0.0;     // includes the IR objective offset
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
};

/// Conversion of the IR to min c.x s.t. Ax = b, Gx + s = h, s in K with
/// K = orthant x SOC x ... Orthant rows come first: cone blocks in IR order,
/// then lower bounds, then upper bounds; SOC blocks follow in IR order with
/// rotated cones mapped through (s+t, s-t, sqrt(2) u). Each block is scaled
/// by a positive constant for conditioning; row_scale holds it per row and
/// duals are reported against the unscaled rows.
struct StandardForm {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  int orthant_rows = 0;
  std::vector<int> soc_dims;
  Eigen::VectorXd row_scale;
};

inline StandardForm to_standard_form(const ConicProblem& p, bool scale_rows = true) {
  p.check_consistent();
  const int n = p.num_vars;
  const double inf = std::numeric_limits<double>::infinity();

  int lower_rows = 0, upper_rows = 0;
  for (int i = 0; i < n; ++i) {
    if (p.lower(i) > -inf) ++lower_rows;
    if (p.upper(i) < inf) ++upper_rows;
  }
  int orthant = lower_rows + upper_rows;
  int soc_total = 0;
  std::vector<int> soc_dims;
  for (const auto& block : p.cones) {
    if (block.type == ConeType::NonNegative) {
      orthant += block.rows();
    } else {
      soc_dims.push_back(block.rows());
      soc_total += block.rows();
    }
  }
  int m = orthant + soc_total;
  if (m == 0) {  // degenerate: keep the cone machinery alive with one slack row
    StandardForm sf;
    sf.G = Eigen::MatrixXd::Zero(1, n);
    sf.h = Eigen::VectorXd::Ones(1);
    sf.orthant_rows = 1;
    sf.row_scale = Eigen::VectorXd::Ones(1);
    return sf;
  }

  StandardForm sf;
  sf.G = Eigen::MatrixXd::Zero(m, n);
  sf.h = Eigen::VectorXd::Zero(m);
  sf.orthant_rows = orthant;
  sf.soc_dims = soc_dims;
  sf.row_scale = Eigen::VectorXd::Ones(m);

  int row = 0;
  auto block_scale = [&](int first, int rows) {
    if (!scale_rows) return;
    double mag = std::max(sf.G.block(first, 0, rows, n).cwiseAbs().maxCoeff(),
                          sf.h.segment(first, rows).cwiseAbs().maxCoeff());
    if (mag <= 0) return;
    sf.G.block(first, 0, rows, n) /= mag;
    sf.h.segment(first, rows) /= mag;
    sf.row_scale.segment(first, rows).setConstant(1.0 / mag);
  };

  // s = offset + coeffs x >= 0  ->  G = -coeffs, h = offset, rowwise scaling
  for (const auto& block : p.cones) {
    if (block.type != ConeType::NonNegative) continue;
    for (int r = 0; r < block.rows(); ++r) {
      sf.G.row(row) = -block.coeffs.row(r);
      sf.h(row) = block.offset(r);
      block_scale(row, 1);
      ++row;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (p.lower(i) > -inf) {  // x_i - lower >= 0
      sf.G(row, i) = -1.0;
      sf.h(row) = -p.lower(i);
      ++row;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (p.upper(i) < inf) {  // upper - x_i >= 0
      sf.G(row, i) = 1.0;
      sf.h(row) = p.upper(i);
      ++row;
    }
  }
  for (const auto& block : p.cones) {
    if (block.type == ConeType::NonNegative) continue;
    int rows = block.rows();
    if (block.type == ConeType::SecondOrder) {
      sf.G.block(row, 0, rows, n) = -block.coeffs;
      sf.h.segment(row, rows) = block.offset;
    } else {
      // (a, b, u) with 2ab >= ||u||^2  <->  (a+b, a-b, sqrt(2) u) in SOC
      sf.G.row(row) = -(block.coeffs.row(0) + block.coeffs.row(1));
      sf.h(row) = block.offset(0) + block.offset(1);
      sf.G.row(row + 1) = -(block.coeffs.row(0) - block.coeffs.row(1));
      sf.h(row + 1) = block.offset(0) - block.offset(1);
      for (int r = 2; r < rows; ++r) {
        sf.G.row(row + r) = -std::sqrt(2.0) * block.coeffs.row(r);
        sf.h(row + r) = std::sqrt(2.0) * block.offset(r);
      }
    }
    block_scale(row, rows);
    row += rows;
  }
  return sf;
}

namespace detail {

/// Cone layout helper over the standard-form vector of size m.
struct ConeLayout {
  int orthant = 0;
  std::vector<int> soc_dims;
  std::vector<int> soc_starts;
  int m = 0;

  ConeLayout() = default;
  ConeLayout(int orthant_rows, const std::vector<int>& dims)
      : orthant(orthant_rows), soc_dims(dims) {
    int at = orthant;
    for (int d : dims) {
      soc_starts.push_back(at);
      at += d;
    }
    m = at;
  }

  int degree() const { return orthant + static_cast<int>(soc_dims.size()); }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e.head(orthant).setOnes();
    for (std::size_t b = 0; b < soc_dims.size(); ++b) e(soc_starts[b]) = 1.0;
    return e;
  }

  /// Smallest cone margin; positive means strictly inside.
  double margin(const Eigen::VectorXd& v) const {
    double worst = std::numeric_limits<double>::infinity();
    if (orthant > 0) worst = v.head(orthant).minCoeff();
    for (std::size_t b = 0; b < soc_dims.size(); ++b) {
      const auto seg = v.segment(soc_starts[b], soc_dims[b]);
      worst = std::min(worst, seg(0) - seg.tail(seg.size() - 1).norm());
    }
    return worst;
  }

  /// Largest alpha in [0, cap] with v + alpha dv staying in the cone.
  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                  double cap) const {
    double alpha = cap;
    for (int i = 0; i < orthant; ++i)
      if (dv(i) < 0) alpha = std::min(alpha, -v(i) / dv(i));
    for (std::size_t b = 0; b < soc_dims.size(); ++b) {
      const auto s = v.segment(soc_starts[b], soc_dims[b]);
      const auto d = dv.segment(soc_starts[b], soc_dims[b]);
      const auto s1 = s.tail(s.size() - 1);
      const auto d1 = d.tail(d.size() - 1);
      double a = d(0) * d(0) - d1.squaredNorm();
      double bq = 2.0 * (s(0) * d(0) - s1.dot(d1));
      double c = s(0) * s(0) - s1.squaredNorm();
      c = std::max(c, 0.0);
      double root = std::numeric_limits<double>::infinity();
      if (std::abs(a) > 1e-300) {
        double disc = bq * bq - 4 * a * c;
        if (disc >= 0) {
          double sq = std::sqrt(disc);
          for (double r : {(-bq - sq) / (2 * a), (-bq + sq) / (2 * a)})
            if (r > 0) root = std::min(root, r);
        }
      } else if (bq < 0) {
        root = -c / bq;
      }
      if (d(0) < 0) root = std::min(root, -s(0) / d(0));
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  /// Jordan product u o v.
  Eigen::VectorXd product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd w(m);
    w.head(orthant) = u.head(orthant).cwiseProduct(v.head(orthant));
    for (std::size_t b = 0; b < soc_dims.size(); ++b) {
      int at = soc_starts[b], d = soc_dims[b];
      const auto ub = u.segment(at, d);
      const auto vb = v.segment(at, d);
      w(at) = ub.dot(vb);
      w.segment(at + 1, d - 1) =
          ub(0) * vb.tail(d - 1) + vb(0) * ub.tail(d - 1);
    }
    return w;
  }

  /// Solves lambda o u = d for u.
  Eigen::VectorXd divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
    Eigen::VectorXd u(m);
    u.head(orthant) = d.head(orthant).cwiseQuotient(lambda.head(orthant));
    for (std::size_t b = 0; b < soc_dims.size(); ++b) {
      int at = soc_starts[b], q = soc_dims[b];
      const auto lb = lambda.segment(at, q);
      const auto db = d.segment(at, q);
      double det = lb(0) * lb(0) - lb.tail(q - 1).squaredNorm();
      double u0 = (lb(0) * db(0) - lb.tail(q - 1).dot(db.tail(q - 1))) / det;
      u(at) = u0;
      u.segment(at + 1, q - 1) = (db.tail(q - 1) - u0 * lb.tail(q - 1)) / lb(0);
    }
    return u;
  }
};

/// Nesterov-Todd scaling: W z = W^{-1} s = lambda per cone block.
struct NtScaling {
  Eigen::VectorXd orth_w;  // diagonal of W on orthant rows
  std::vector<Eigen::MatrixXd> soc_w, soc_w_inv;
  Eigen::VectorXd lambda;

  void compute(const ConeLayout& lay, const Eigen::VectorXd& s,
               const Eigen::VectorXd& z) {
    orth_w = (s.head(lay.orthant).cwiseQuotient(z.head(lay.orthant))).cwiseSqrt();
    lambda.resize(lay.m);
    lambda.head(lay.orthant) =
        (s.head(lay.orthant).cwiseProduct(z.head(lay.orthant))).cwiseSqrt();
    soc_w.clear();
    soc_w_inv.clear();
    for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
      int at = lay.soc_starts[b], q = lay.soc_dims[b];
      Eigen::VectorXd sb = s.segment(at, q), zb = z.segment(at, q);
      double snorm = std::sqrt(std::max(sb(0) * sb(0) - sb.tail(q - 1).squaredNorm(),
                                        1e-300));
      double znorm = std::sqrt(std::max(zb(0) * zb(0) - zb.tail(q - 1).squaredNorm(),
                                        1e-300));
      Eigen::VectorXd sbar = sb / snorm, zbar = zb / znorm;
      double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
      Eigen::VectorXd wbar(q);
      wbar(0) = (sbar(0) + zbar(0)) / (2 * gamma);
      wbar.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2 * gamma);
      double eta = std::sqrt(snorm / znorm);

      // W = eta (2 v v' - J) with v the Jordan square root of the scaling
      // point wbar, so that W^2 = eta^2 (2 wbar wbar' - J)
      Eigen::VectorXd v = wbar;
      v(0) += 1.0;
      v /= std::sqrt(2.0 * (wbar(0) + 1.0));
      Eigen::MatrixXd j = -Eigen::MatrixXd::Identity(q, q);
      j(0, 0) = 1.0;
      Eigen::MatrixXd w = eta * (2.0 * v * v.transpose() - j);
      Eigen::VectorXd jv = j * v;
      Eigen::MatrixXd winv = (2.0 * jv * jv.transpose() - j) / eta;
      soc_w.push_back(w);
      soc_w_inv.push_back(winv);
      lambda.segment(at, q) = w * zb;
    }
  }

  Eigen::VectorXd apply(const ConeLayout& lay, const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(lay.m);
    r.head(lay.orthant) = orth_w.cwiseProduct(v.head(lay.orthant));
    for (std::size_t b = 0; b < lay.soc_dims.size(); ++b)
      r.segment(lay.soc_starts[b], lay.soc_dims[b]) =
          soc_w[b] * v.segment(lay.soc_starts[b], lay.soc_dims[b]);
    return r;
  }

  Eigen::VectorXd apply_inv(const ConeLayout& lay, const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(lay.m);
    r.head(lay.orthant) = v.head(lay.orthant).cwiseQuotient(orth_w);
    for (std::size_t b = 0; b < lay.soc_dims.size(); ++b)
      r.segment(lay.soc_starts[b], lay.soc_dims[b]) =
          soc_w_inv[b] * v.segment(lay.soc_starts[b], lay.soc_dims[b]);
    return r;
  }
};

/// Reduced KKT solver for [0 A' G'; A 0 0; G 0 -W^2] via the normal-equations
/// form H = G' W^{-2} G, with static regularization and iterative refinement
/// against the unregularized system.
struct KktSolver {
  const Eigen::MatrixXd *a_ptr = nullptr, *g_ptr = nullptr;
  const ConeLayout* lay = nullptr;
  const NtScaling* scaling = nullptr;
  Eigen::MatrixXd scaled_g;  // W^{-1} G
  Eigen::LLT<Eigen::MatrixXd> h_fact;
  Eigen::MatrixXd h_inv_at;  // H^{-1} A'
  Eigen::LLT<Eigen::MatrixXd> schur_fact;
  double reg = 0.0;

  void factor(const Eigen::MatrixXd& a, const Eigen::MatrixXd& g,
              const ConeLayout& layout, const NtScaling& nt, double static_reg) {
    a_ptr = &a;
    g_ptr = &g;
    lay = &layout;
    scaling = &nt;
    scaled_g = g;
    scaled_g.topRows(layout.orthant).array().colwise() /=
        nt.orth_w.array();
    for (std::size_t b = 0; b < layout.soc_dims.size(); ++b)
      scaled_g.middleRows(layout.soc_starts[b], layout.soc_dims[b]) =
          nt.soc_w_inv[b] * g.middleRows(layout.soc_starts[b], layout.soc_dims[b]);

    const int n = static_cast<int>(g.cols());
    reg = static_reg * std::max(1.0, scaled_g.squaredNorm() / n);
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd h = scaled_g.transpose() * scaled_g +
                          reg * Eigen::MatrixXd::Identity(n, n);
      h_fact.compute(h);
      if (h_fact.info() == Eigen::Success) break;
      reg *= 100.0;
    }
    if (a.rows() > 0) {
      h_inv_at = h_fact.solve(a.transpose());
      Eigen::MatrixXd schur = a * h_inv_at;
      schur += reg * Eigen::MatrixXd::Identity(a.rows(), a.rows());
      schur_fact.compute(schur);
    }
  }

  Eigen::VectorXd apply_w2(const Eigen::VectorXd& v) const {
    return scaling->apply(*lay, scaling->apply(*lay, v));
  }

  void solve_once(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                  const Eigen::VectorXd& r, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                  Eigen::VectorXd& dz) const {
    const Eigen::MatrixXd& a = *a_ptr;
    const Eigen::MatrixXd& g = *g_ptr;
    Eigen::VectorXd winv_r = scaling->apply_inv(*lay, r);
    Eigen::VectorXd rhs = p + scaled_g.transpose() * winv_r;
    if (a.rows() > 0) {
      Eigen::VectorXd tmp = h_fact.solve(rhs);
      dy = schur_fact.solve(a * tmp - q);
      dx = tmp - h_inv_at * dy;
    } else {
      dy.resize(0);
      dx = h_fact.solve(rhs);
    }
    dz = scaling->apply_inv(*lay, scaling->apply_inv(*lay, g * dx - r));
  }

  /// Two refinement rounds against the exact 3x3 system.
  void solve(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
             const Eigen::VectorXd& r, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
             Eigen::VectorXd& dz) const {
    const Eigen::MatrixXd& a = *a_ptr;
    const Eigen::MatrixXd& g = *g_ptr;
    solve_once(p, q, r, dx, dy, dz);
    for (int round = 0; round < 2; ++round) {
      Eigen::VectorXd res_p = p - g.transpose() * dz;
      if (a.rows() > 0) res_p -= a.transpose() * dy;
      Eigen::VectorXd res_q = a.rows() > 0 ? (q - a * dx).eval() : Eigen::VectorXd();
      Eigen::VectorXd res_r = r - g * dx + apply_w2(dz);
      Eigen::VectorXd cx, cy, cz;
      solve_once(res_p, a.rows() > 0 ? res_q : Eigen::VectorXd::Zero(0), res_r, cx,
                 cy, cz);
      dx += cx;
      if (a.rows() > 0) dy += cy;
      dz += cz;
    }
  }
};

}  // namespace detail

/// Homogeneous self-dual interior-point solve of the IR problem.
inline ConicSolution solve(const ConicProblem& prob, const SolverSettings& settings = {}) {
  using detail::ConeLayout;
  using detail::KktSolver;
  using detail::NtScaling;

  StandardForm sf = to_standard_form(prob);
  const int n = prob.num_vars;
  const int p = static_cast<int>(prob.eq_coeffs.rows());
  const Eigen::MatrixXd& a = prob.eq_coeffs;
  const Eigen::VectorXd& b = prob.eq_rhs;
  const Eigen::MatrixXd& g = sf.G;
  const Eigen::VectorXd& h = sf.h;
  const Eigen::VectorXd& c = prob.objective;
  ConeLayout lay(sf.orthant_rows, sf.soc_dims);
  const int m = lay.m;

  const double bnorm = 1.0 + b.norm();
  const double hnorm = 1.0 + h.norm();
  const double cnorm = 1.0 + c.norm();

  ConicSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.eq_dual = Eigen::VectorXd::Zero(p);
  sol.cone_dual = Eigen::VectorXd::Zero(m);

  // initial point from two least-squares style KKT solves with W = I
  Eigen::VectorXd s(m), z(m), x(n), y(p);
  {
    NtScaling unit;
    unit.orth_w = Eigen::VectorXd::Ones(m);
    ConeLayout unit_lay(m, {});
    KktSolver kkt;
    kkt.factor(a, g, unit_lay, unit, settings.static_reg);
    Eigen::VectorXd dx, dy, dz;
    kkt.solve(Eigen::VectorXd::Zero(n), b, h, dx, dy, dz);
    x = dx;
    s = -dz;  // equals h - Gx up to regularization
    double viol = -lay.margin(s);
    if (viol >= 0) s += (1.0 + viol) * lay.identity();
    kkt.solve(-c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), dx, dy, dz);
    y = dy;
    z = dz;
    viol = -lay.margin(z);
    if (viol >= 0) z += (1.0 + viol) * lay.identity();
  }
  double tau = 1.0, kappa = 1.0;

  const int degree = lay.degree() + 1;
  double best_score = std::numeric_limits<double>::infinity();
  NtScaling nt;
  KktSolver kkt;
  Eigen::VectorXd u1x(n), u1y(p), u1z(m);

  for (int iter = 0; iter <= settings.max_iters; ++iter) {
    // residuals of the embedding
    Eigen::VectorXd rx = g.transpose() * z + c * tau;
    if (p > 0) rx += a.transpose() * y;
    Eigen::VectorXd ry = p > 0 ? (a * x - b * tau).eval() : Eigen::VectorXd();
    Eigen::VectorXd rz = s + g * x - h * tau;
    double rtau = kappa + c.dot(x) + h.dot(z) + (p > 0 ? b.dot(y) : 0.0);

    double pcost = c.dot(x) / tau;
    double dcost = -(h.dot(z) + (p > 0 ? b.dot(y) : 0.0)) / tau;
    double gap_abs = s.dot(z) / (tau * tau);
    double rel_gap = gap_abs / std::max(1.0, std::abs(pcost));
    double pres = std::max(p > 0 ? ry.norm() / (tau * bnorm) : 0.0,
                           rz.norm() / (tau * hnorm));
    double dres = rx.norm() / (tau * cnorm);

    if (settings.verbose)
      std::printf("it %3d  pc %+10.3e dc %+10.3e  gap %8.2e  pres %8.2e dres %8.2e  "
                  "tau %8.2e kap %8.2e\n",
                  iter, pcost, dcost, gap_abs, pres, dres, tau, kappa);

    double score = std::max({pres, dres, rel_gap});
    if (score < best_score) {
      best_score = score;
      sol.x = x / tau;
      sol.eq_dual = y / tau;
      sol.cone_dual = (z / tau).cwiseProduct(sf.row_scale);
      sol.objective = pcost + prob.objective_offset;
      sol.primal_residual = pres;
      sol.dual_residual = dres;
      sol.gap = gap_abs;
      sol.rel_gap = rel_gap;
      sol.iterations = iter;
    }

    if (pres <= settings.tol && dres <= settings.tol && rel_gap <= settings.tol) {
      sol.status = SolveStatus::Optimal;
      sol.x = x / tau;
      sol.eq_dual = y / tau;
      sol.cone_dual = (z / tau).cwiseProduct(sf.row_scale);
      sol.objective = pcost + prob.objective_offset;
      sol.primal_residual = pres;
      sol.dual_residual = dres;
      sol.gap = gap_abs;
      sol.rel_gap = rel_gap;
      sol.iterations = iter;
      return sol;
    }

    // infeasibility certificates
    double dual_sum = h.dot(z) + (p > 0 ? b.dot(y) : 0.0);
    if (dual_sum < 0) {
      Eigen::VectorXd yn = y / (-dual_sum), zn = z / (-dual_sum);
      Eigen::VectorXd res = g.transpose() * zn;
      if (p > 0) res += a.transpose() * yn;
      if (res.norm() / cnorm <= settings.tol_infeas) {
        sol.status = SolveStatus::Infeasible;
        sol.eq_dual = yn;
        sol.cone_dual = zn.cwiseProduct(sf.row_scale);
        sol.x.setZero();
        sol.objective = std::numeric_limits<double>::infinity();
        sol.iterations = iter;
        return sol;
      }
    }
    if (c.dot(x) < 0) {
      double scale = -c.dot(x);
      Eigen::VectorXd xn = x / scale, sn = s / scale;
      double unb = (g * xn + sn).norm() / hnorm;
      if (p > 0) unb = std::max(unb, (a * xn).norm() / bnorm);
      if (unb <= settings.tol_infeas) {
        sol.status = SolveStatus::Unbounded;
        sol.x = xn;
        sol.objective = -std::numeric_limits<double>::infinity();
        sol.iterations = iter;
        return sol;
      }
    }

    if (iter == settings.max_iters) break;

    double mu = (s.dot(z) + tau * kappa) / degree;

    nt.compute(lay, s, z);
    kkt.factor(a, g, lay, nt, settings.static_reg);
    kkt.solve(-c, b, h, u1x, u1y, u1z);
    double dot1 = c.dot(u1x) + h.dot(u1z) + (p > 0 ? b.dot(u1y) : 0.0);

    auto direction = [&](const Eigen::VectorXd& r5, double r6, double res_weight,
                         Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                         Eigen::VectorXd& ds, double& dtau, double& dkappa) {
      Eigen::VectorXd wdiv = nt.apply(lay, lay.divide(nt.lambda, r5));
      Eigen::VectorXd urx, ury, urz;
      kkt.solve(-res_weight * rx, -res_weight * ry,
                -res_weight * rz - wdiv, urx, ury, urz);
      double dotr = c.dot(urx) + h.dot(urz) + (p > 0 ? b.dot(ury) : 0.0);
      dtau = (-res_weight * rtau - r6 / tau - dotr) / (dot1 - kappa / tau);
      dx = urx + dtau * u1x;
      if (p > 0) dy = ury + dtau * u1y; else dy.resize(0);
      dz = urz + dtau * u1z;
      ds = wdiv - kkt.apply_w2(dz);
      dkappa = (r6 - kappa * dtau) / tau;
    };

    // predictor
    Eigen::VectorXd dxa, dya, dza, dsa;
    double dtaua, dkappaa;
    Eigen::VectorXd r5 = -lay.product(nt.lambda, nt.lambda);
    direction(r5, -tau * kappa, 1.0, dxa, dya, dza, dsa, dtaua, dkappaa);

    double alpha = lay.max_step(s, dsa, 10.0);
    alpha = std::min(alpha, lay.max_step(z, dza, 10.0));
    if (dtaua < 0) alpha = std::min(alpha, -tau / dtaua);
    if (dkappaa < 0) alpha = std::min(alpha, -kappa / dkappaa);
    alpha = std::min(alpha, 1.0);
    double sigma = std::pow(1.0 - alpha, 3);
    sigma = std::min(std::max(sigma, 1e-9), 0.999);

    // corrector with Mehrotra second-order term
    Eigen::VectorXd ws = nt.apply_inv(lay, dsa);
    Eigen::VectorXd wz = nt.apply(lay, dza);
    Eigen::VectorXd r5c =
        r5 - lay.product(ws, wz) + sigma * mu * lay.identity();
    double r6c = -tau * kappa - dtaua * dkappaa + sigma * mu;
    Eigen::VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    direction(r5c, r6c, 1.0 - sigma, dx, dy, dz, ds, dtau, dkappa);

    alpha = lay.max_step(s, ds, 10.0);
    alpha = std::min(alpha, lay.max_step(z, dz, 10.0));
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(settings.step_fraction * alpha, 1.0);
    if (settings.verbose)
      std::printf("        sigma %8.2e mu %8.2e alpha %8.2e  marg_s %8.2e marg_z %8.2e\n",
                  sigma, mu, alpha, lay.margin(s), lay.margin(z));
    if (!std::isfinite(alpha) || alpha <= 1e-10) break;

    x += alpha * dx;
    if (p > 0) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (tau <= 1e-14 || !std::isfinite(tau)) break;
    // the embedding is homogeneous: keep the iterate on the tau+kappa = 2 slice
    double rescale = 2.0 / (tau + kappa);
    x *= rescale;
    y *= rescale;
    z *= rescale;
    s *= rescale;
    tau *= rescale;
    kappa *= rescale;
  }

  sol.status = SolveStatus::NumericalFailure;
  return sol;
}

/// Report of an independent residual recomputation for a returned solution.
struct CertificateReport {
  bool valid = false;
  double primal_eq_residual = 0.0;
  double primal_cone_violation = 0.0;  // negative margins only
  double dual_residual = 0.0;
  double dual_cone_violation = 0.0;
  double complementarity = 0.0;
  std::string detail;
};

/// Recomputes all residuals from the raw problem data and flags anything
/// worse than 10x the solver tolerance.
inline CertificateReport check_certificate(const ConicProblem& prob,
                                           const ConicSolution& sol,
                                           const SolverSettings& settings = {}) {
  StandardForm sf = to_standard_form(prob);
  detail::ConeLayout lay(sf.orthant_rows, sf.soc_dims);
  // undo the conditioning scale: duals are reported against unscaled rows
  Eigen::MatrixXd g = sf.G.array().colwise() / sf.row_scale.array();
  Eigen::VectorXd h = sf.h.cwiseQuotient(sf.row_scale);

  CertificateReport rep;
  const double limit = 10.0 * settings.tol;
  const double bnorm = 1.0 + prob.eq_rhs.norm();
  const double hnorm = 1.0 + h.norm();
  const double cnorm = 1.0 + prob.objective.norm();

  if (sol.status == SolveStatus::Optimal) {
    Eigen::VectorXd slack = h - g * sol.x;
    rep.primal_eq_residual =
        prob.eq_coeffs.rows() > 0
            ? (prob.eq_coeffs * sol.x - prob.eq_rhs).norm() / bnorm
            : 0.0;
    // margin per unscaled row; normalize per-block for comparability
    Eigen::VectorXd scaled_slack = slack.cwiseProduct(sf.row_scale);
    rep.primal_cone_violation = std::max(0.0, -lay.margin(scaled_slack)) / 1.0;
    Eigen::VectorXd dual_res = prob.objective + g.transpose() * sol.cone_dual;
    if (prob.eq_coeffs.rows() > 0) dual_res += prob.eq_coeffs.transpose() * sol.eq_dual;
    rep.dual_residual = dual_res.norm() / cnorm;
    Eigen::VectorXd scaled_dual = sol.cone_dual.cwiseQuotient(sf.row_scale);
    rep.dual_cone_violation = std::max(0.0, -lay.margin(scaled_dual));
    double primal_obj = prob.objective.dot(sol.x);
    double dual_obj = -h.dot(sol.cone_dual) -
                      (prob.eq_coeffs.rows() > 0 ? prob.eq_rhs.dot(sol.eq_dual) : 0.0);
    rep.complementarity =
        std::abs(primal_obj - dual_obj) / std::max(1.0, std::abs(primal_obj));
    rep.valid = rep.primal_eq_residual <= limit && rep.primal_cone_violation <= limit &&
                rep.dual_residual <= limit && rep.dual_cone_violation <= limit &&
                rep.complementarity <= limit;
    if (!rep.valid) rep.detail = "optimality residuals exceed 10x tolerance";
    return rep;
  }
  if (sol.status == SolveStatus::Infeasible) {
    double denom = -(h.dot(sol.cone_dual) +
                     (prob.eq_coeffs.rows() > 0 ? prob.eq_rhs.dot(sol.eq_dual) : 0.0));
    Eigen::VectorXd res = g.transpose() * sol.cone_dual;
    if (prob.eq_coeffs.rows() > 0) res += prob.eq_coeffs.transpose() * sol.eq_dual;
    rep.dual_residual = res.norm() / cnorm;
    Eigen::VectorXd scaled_dual = sol.cone_dual.cwiseQuotient(sf.row_scale);
    rep.dual_cone_violation = std::max(0.0, -lay.margin(scaled_dual));
    rep.valid = denom > 0 && rep.dual_residual <= limit * denom &&
                rep.dual_cone_violation <= limit;
    if (!rep.valid) rep.detail = "infeasibility certificate does not verify";
    return rep;
  }
  if (sol.status == SolveStatus::Unbounded) {
    double denom = -prob.objective.dot(sol.x);
    Eigen::VectorXd ray_slack = -g * sol.x;
    rep.primal_eq_residual = prob.eq_coeffs.rows() > 0
                                 ? (prob.eq_coeffs * sol.x).norm() / bnorm
                                 : 0.0;
    rep.primal_cone_violation =
        std::max(0.0, -lay.margin(ray_slack.cwiseProduct(sf.row_scale))) / hnorm;
    rep.valid = denom > 0 && rep.primal_eq_residual <= limit &&
                rep.primal_cone_violation <= limit;
    if (!rep.valid) rep.detail = "unboundedness certificate does not verify";
    return rep;
  }
  rep.detail = "numerical failure: no certificate";
  return rep;
}

}  // namespace cfplan::conic
