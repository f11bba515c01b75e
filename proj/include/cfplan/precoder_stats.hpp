#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cfplan/propagation.hpp"

namespace cfplan {

/// Normalized LP-MMSE precoders per UE-AP pair, one N x M block each.
struct PrecoderBatch {
  std::vector<std::vector<Eigen::MatrixXcd>> w;  // [i][l]: N x M, E{||w||^2} = 1
  Eigen::MatrixXd mean_combiner_norm2;           // [i][l]: batch mean of ||v||^2
  int realizations = 0;
};

/// Per-AP LP-MMSE combiners regularized by the served-set estimates: at AP l
/// the regularizer sums, for every pilot, the strongest-gain UE of that pilot
/// (plus the target UE itself). The downlink precoder is the conjugated
/// combiner, normalized by the batch-average power, so that the effective
/// channel mean lands on the nonnegative real axis under the transpose
/// signal-model convention.
inline PrecoderBatch lpmmse_precoders(const EstimateBatch& est,
                                      const CorrelationSet& corr,
                                      const PilotAssignment& pilots,
                                      double uplink_weight, double noise_power) {
  const int num_ues = static_cast<int>(est.hhat.size());
  if (num_ues == 0) return {};
  const int num_aps = static_cast<int>(est.hhat[0].size());
  const int n = static_cast<int>(est.hhat[0][0].rows());
  const int realizations = est.realizations;

  PrecoderBatch prec;
  prec.realizations = realizations;
  prec.w.assign(num_ues, std::vector<Eigen::MatrixXcd>(num_aps));
  prec.mean_combiner_norm2 = Eigen::MatrixXd::Zero(num_ues, num_aps);

  std::vector<std::vector<int>> sharers(pilots.pilot_count);
  for (int k = 0; k < num_ues; ++k) sharers[pilots.pilot_of[k]].push_back(k);

  for (int l = 0; l < num_aps; ++l) {
    // strongest UE per pilot at this AP
    std::vector<int> strongest;
    std::vector<char> in_set(num_ues, 0);
    for (const auto& group : sharers) {
      if (group.empty()) continue;
      int best = group.front();
      for (int i : group)
        if (corr.beta(i, l) > corr.beta(best, l)) best = i;
      strongest.push_back(best);
      in_set[best] = 1;
    }

    Eigen::MatrixXcd base_term = Eigen::MatrixXcd::Zero(n, n);
    for (int j : strongest) base_term += uplink_weight * est.err_cov[j][l];

    std::vector<Eigen::MatrixXcd> v(num_ues, Eigen::MatrixXcd(n, realizations));
    for (int m = 0; m < realizations; ++m) {
      Eigen::MatrixXcd reg = base_term + noise_power * Eigen::MatrixXcd::Identity(n, n);
      for (int j : strongest) {
        const auto hj = est.hhat[j][l].col(m);
        reg += uplink_weight * (hj * hj.adjoint());
      }
      Eigen::LDLT<Eigen::MatrixXcd> shared(reg);
      for (int i = 0; i < num_ues; ++i) {
        const auto hi = est.hhat[i][l].col(m);
        if (in_set[i]) {
          v[i].col(m) = shared.solve(hi);
        } else {
          Eigen::MatrixXcd own = reg + uplink_weight * (hi * hi.adjoint() +
                                                        est.err_cov[i][l]);
          v[i].col(m) = Eigen::LDLT<Eigen::MatrixXcd>(own).solve(hi);
        }
      }
    }

    for (int i = 0; i < num_ues; ++i) {
      double acc = 0.0, comp = 0.0;  // compensated mean of ||v||^2
      for (int m = 0; m < realizations; ++m) {
        double term = v[i].col(m).squaredNorm() - comp;
        double next = acc + term;
        comp = (next - acc) - term;
        acc = next;
      }
      double mean_norm2 = acc / realizations;
      prec.mean_combiner_norm2(i, l) = mean_norm2;
      if (mean_norm2 > 0)
        prec.w[i][l] = v[i].conjugate() / std::sqrt(mean_norm2);
      else
        prec.w[i][l] = Eigen::MatrixXcd::Zero(n, realizations);
    }
  }
  return prec;
}

/// Monte Carlo estimates of the effective-channel means b_k and interference
/// moment matrices C_ki that define the downlink SINR. Matrices are stored as
/// their real symmetric part (exact for real power vectors) and repaired to
/// PSD by eigenvalue clipping so the cone build can factor them.
struct PrecoderStatistics {
  Eigen::MatrixXd b;                            // K x L, nonnegative
  std::vector<std::vector<Eigen::MatrixXd>> c;  // c[k][i]: L x L symmetric PSD
  double noise_power = 0;
  int realizations = 0;
  // diagnostics
  Eigen::MatrixXcd raw_mean;  // unclipped complex mean of h^T w per (k, l)
  double psd_repair_rel = 0;  // worst relative Frobenius change from clipping
};

namespace detail {

struct KahanMatrix {
  Eigen::MatrixXcd sum, comp;
  explicit KahanMatrix(int rows, int cols)
      : sum(Eigen::MatrixXcd::Zero(rows, cols)),
        comp(Eigen::MatrixXcd::Zero(rows, cols)) {}
  void add(const Eigen::MatrixXcd& term) {
    Eigen::MatrixXcd y = term - comp;
    Eigen::MatrixXcd t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

inline Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& sym, double* rel_change) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd repaired =
      eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  if (rel_change) {
    double base = sym.norm();
    *rel_change = base > 0 ? (repaired - sym).norm() / base : 0.0;
  }
  return 0.5 * (repaired + repaired.transpose());
}

}  // namespace detail

inline PrecoderStatistics estimate_stats(const ChannelBatch& batch,
                                         const PrecoderBatch& prec,
                                         double noise_power) {
  const int num_ues = static_cast<int>(batch.h.size());
  if (num_ues == 0) return {};
  const int num_aps = static_cast<int>(batch.h[0].size());
  const int n = static_cast<int>(batch.h[0][0].rows());
  const int realizations = batch.realizations;
  if (prec.realizations != realizations)
    throw std::invalid_argument("estimate_stats: batch sizes differ");

  using detail::KahanMatrix;
  KahanMatrix mean_acc(num_ues, num_aps);
  std::vector<std::vector<KahanMatrix>> c_acc(
      num_ues, std::vector<KahanMatrix>(num_ues, KahanMatrix(num_aps, num_aps)));

  Eigen::MatrixXcd channels(n, num_ues), precoders(n, num_ues);
  Eigen::MatrixXcd cross(num_ues, num_ues);
  std::vector<Eigen::MatrixXcd> eff(num_aps);  // eff[l](k, i) = h_kl^T w_il
  Eigen::MatrixXcd mean_term(num_ues, num_aps);
  Eigen::VectorXcd u(num_aps), ucol(num_aps);

  for (int m = 0; m < realizations; ++m) {
    for (int l = 0; l < num_aps; ++l) {
      for (int k = 0; k < num_ues; ++k) channels.col(k) = batch.h[k][l].col(m);
      for (int i = 0; i < num_ues; ++i) precoders.col(i) = prec.w[i][l].col(m);
      eff[l] = channels.transpose() * precoders;
    }
    for (int k = 0; k < num_ues; ++k)
      for (int l = 0; l < num_aps; ++l) mean_term(k, l) = eff[l](k, k);
    mean_acc.add(mean_term);
    for (int k = 0; k < num_ues; ++k) {
      for (int i = 0; i < num_ues; ++i) {
        for (int l = 0; l < num_aps; ++l) u(l) = eff[l](k, i);
        c_acc[k][i].add(u * u.adjoint());
      }
    }
  }

  PrecoderStatistics stats;
  stats.noise_power = noise_power;
  stats.realizations = realizations;
  stats.raw_mean = mean_acc.sum / realizations;
  stats.b = stats.raw_mean.real().cwiseMax(0.0);
  stats.c.assign(num_ues, std::vector<Eigen::MatrixXd>(num_ues));
  double worst_repair = 0.0;
  for (int k = 0; k < num_ues; ++k) {
    for (int i = 0; i < num_ues; ++i) {
      Eigen::MatrixXcd raw = c_acc[k][i].sum / realizations;
      if (i == k) {
        Eigen::VectorXcd mean_k = stats.raw_mean.row(k).transpose();
        raw -= mean_k * mean_k.adjoint();
      }
      Eigen::MatrixXd sym = 0.5 * (raw + raw.adjoint()).real();
      sym = 0.5 * (sym + sym.transpose()).eval();
      double rel = 0.0;
      stats.c[k][i] = detail::clip_psd(sym, &rel);
      worst_repair = std::max(worst_repair, rel);
    }
  }
  stats.psd_repair_rel = worst_repair;
  return stats;
}

/// Downlink SINR of UE k for the sqrt-power matrix rho (rows are UEs).
inline double sinr_value(const PrecoderStatistics& stats, const Eigen::MatrixXd& rho,
                         int k) {
  double signal = stats.b.row(k).dot(rho.row(k));
  double interference = 0.0;
  for (int i = 0; i < rho.rows(); ++i)
    interference += rho.row(i) * stats.c[k][i] * rho.row(i).transpose();
  return signal * signal / (interference + stats.noise_power);
}

/// Spectral efficiency of one coherence block given its downlink share.
inline double se_value(double sinr, int tau_d, int tau_c) {
  return static_cast<double>(tau_d) / tau_c * std::log2(1.0 + sinr);
}

/// Inverse of se_value: the SINR needed to hit an SE target.
inline double sinr_target_for_se(double se, int tau_d, int tau_c) {
  return std::exp2(se * tau_c / tau_d) - 1.0;
}

// --- serialization so the planner can run without re-simulating ---

inline nlohmann::json stats_to_json(const PrecoderStatistics& stats) {
  nlohmann::json j;
  j["noise_power_w"] = stats.noise_power;
  j["realizations"] = stats.realizations;
  const int num_ues = static_cast<int>(stats.b.rows());
  const int num_aps = static_cast<int>(stats.b.cols());
  j["num_ues"] = num_ues;
  j["num_aps"] = num_aps;
  auto& b = j["b"] = nlohmann::json::array();
  for (int k = 0; k < num_ues; ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int l = 0; l < num_aps; ++l) row.push_back(stats.b(k, l));
    b.push_back(std::move(row));
  }
  auto& c = j["c"] = nlohmann::json::array();
  for (int k = 0; k < num_ues; ++k) {
    nlohmann::json per_k = nlohmann::json::array();
    for (int i = 0; i < num_ues; ++i) {
      nlohmann::json mat = nlohmann::json::array();
      for (int l = 0; l < num_aps; ++l) {
        nlohmann::json row = nlohmann::json::array();
        for (int r = 0; r < num_aps; ++r) row.push_back(stats.c[k][i](l, r));
        mat.push_back(std::move(row));
      }
      per_k.push_back(std::move(mat));
    }
    c.push_back(std::move(per_k));
  }
  return j;
}

inline PrecoderStatistics stats_from_json(const nlohmann::json& j) {
  PrecoderStatistics stats;
  stats.noise_power = j.at("noise_power_w").get<double>();
  stats.realizations = j.at("realizations").get<int>();
  const int num_ues = j.at("num_ues").get<int>();
  const int num_aps = j.at("num_aps").get<int>();
  stats.b.resize(num_ues, num_aps);
  for (int k = 0; k < num_ues; ++k)
    for (int l = 0; l < num_aps; ++l) stats.b(k, l) = j.at("b")[k][l].get<double>();
  stats.c.assign(num_ues, std::vector<Eigen::MatrixXd>(num_ues));
  for (int k = 0; k < num_ues; ++k)
    for (int i = 0; i < num_ues; ++i) {
      stats.c[k][i].resize(num_aps, num_aps);
      for (int l = 0; l < num_aps; ++l)
        for (int r = 0; r < num_aps; ++r)
          stats.c[k][i](l, r) = j.at("c")[k][i][l][r].get<double>();
    }
  stats.raw_mean = stats.b.cast<std::complex<double>>();
  return stats;
}

inline void save_stats(const PrecoderStatistics& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << stats_to_json(stats).dump() << '\n';
}

inline PrecoderStatistics load_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return stats_from_json(j);
}

}  // namespace cfplan
