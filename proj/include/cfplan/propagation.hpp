#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cfplan/config.hpp"
#include "cfplan/rng.hpp"

namespace cfplan {

namespace seeds {
// substream purposes hung off one master seed
constexpr std::uint64_t kTopology = 0x10;
constexpr std::uint64_t kShadowing = 0x20;
constexpr std::uint64_t kChannels = 0x30;
constexpr std::uint64_t kPilotNoise = 0x40;
}  // namespace seeds

/// AP and UE drop for one random setup. Positions in meters.
struct Topology {
  std::vector<Eigen::Vector2d> ap_xy;
  std::vector<Eigen::Vector2d> ue_xy;
  std::uint64_t seed = 0;
};

inline Topology generate_topology(const SystemConfig& cfg, std::uint64_t seed) {
  Topology t;
  t.seed = seed;
  Rng rng(derive_seed(seed, seeds::kTopology));
  t.ap_xy.reserve(cfg.num_aps);
  t.ue_xy.reserve(cfg.num_ues);
  for (int l = 0; l < cfg.num_aps; ++l)
    t.ap_xy.push_back({rng.uniform(0, cfg.area_side_m), rng.uniform(0, cfg.area_side_m)});
  for (int k = 0; k < cfg.num_ues; ++k)
    t.ue_xy.push_back({rng.uniform(0, cfg.area_side_m), rng.uniform(0, cfg.area_side_m)});
  return t;
}

/// Spatial correlation matrices and average channel gains per UE-AP pair.
struct CorrelationSet {
  // spatial[k][l] is N x N Hermitian PSD with trace N * beta(k, l)
  std::vector<std::vector<Eigen::MatrixXcd>> spatial;
  Eigen::MatrixXd beta;  // K x L, linear scale
};

/// Average channel gain in dB for a 3-D distance, log-distance model.
inline double pathloss_db(double distance_m, const SystemConfig& cfg) {
  double d = std::max(distance_m, cfg.min_distance_m);
  return cfg.pathloss_ref_db - cfg.pathloss_slope_db * std::log10(d);
}

/// Average gains beta(k, l) from geometry plus log-normal shadowing.
/// Shadowing is drawn i.i.d. per UE-AP pair from a substream of the
/// topology seed, so equal topologies give equal gains.
inline Eigen::MatrixXd large_scale(const Topology& topo, const SystemConfig& cfg) {
  const int num_ues = static_cast<int>(topo.ue_xy.size());
  const int num_aps = static_cast<int>(topo.ap_xy.size());
  Eigen::MatrixXd beta(num_ues, num_aps);
  Rng shadow(derive_seed(topo.seed, seeds::kShadowing));
  for (int k = 0; k < num_ues; ++k) {
    for (int l = 0; l < num_aps; ++l) {
      double horizontal = (topo.ue_xy[k] - topo.ap_xy[l]).norm();
      double d3 = std::hypot(horizontal, cfg.ap_height_m);
      double shadow_db = cfg.shadowing_std_db * shadow.gaussian();
      beta(k, l) = std::pow(10.0, (pathloss_db(d3, cfg) + shadow_db) / 10.0);
    }
  }
  return beta;
}

/// Gaussian local-scattering correlation for a half-wavelength ULA. The
/// scattering angle is theta + delta with delta ~ N(0, std^2) entering the
/// array phase to first order, which gives the closed-form characteristic
/// function below; trace is pinned to N * beta.
inline Eigen::MatrixXcd correlation_matrix(double nominal_angle_rad,
                                           double angular_std_rad, int antennas,
                                           double beta) {
  Eigen::MatrixXcd r(antennas, antennas);
  const double sin_t = std::sin(nominal_angle_rad);
  const double cos_t = std::cos(nominal_angle_rad);
  for (int m = 0; m < antennas; ++m) {
    for (int n = 0; n < antennas; ++n) {
      double gap = M_PI * (m - n);  // 2*pi*spacing with spacing = 1/2 wavelength
      double spread = gap * angular_std_rad * cos_t;
      std::complex<double> phase(0.0, gap * sin_t);
      r(m, n) = beta * std::exp(phase) * std::exp(-0.5 * spread * spread);
    }
  }
  double trace = r.trace().real();
  if (trace > 0) r *= (antennas * beta) / trace;
  return r;
}

inline CorrelationSet build_correlation(const Topology& topo, const SystemConfig& cfg) {
  CorrelationSet corr;
  corr.beta = large_scale(topo, cfg);
  const double std_rad = cfg.angular_std_deg * M_PI / 180.0;
  corr.spatial.resize(cfg.num_ues);
  for (int k = 0; k < cfg.num_ues; ++k) {
    corr.spatial[k].reserve(cfg.num_aps);
    for (int l = 0; l < cfg.num_aps; ++l) {
      Eigen::Vector2d diff = topo.ue_xy[k] - topo.ap_xy[l];
      double angle = std::atan2(diff.y(), diff.x());
      corr.spatial[k].push_back(
          correlation_matrix(angle, std_rad, cfg.antennas_per_ap, corr.beta(k, l)));
    }
  }
  return corr;
}

/// Deterministic pilot reuse: UE k gets pilot k mod tau_p.
struct PilotAssignment {
  std::vector<int> pilot_of;
  int pilot_count = 0;  // tau_p
};

inline PilotAssignment assign_pilots(int num_ues, int tau_p) {
  if (tau_p < 1) throw std::invalid_argument("assign_pilots: tau_p must be >= 1");
  PilotAssignment p;
  p.pilot_count = tau_p;
  p.pilot_of.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) p.pilot_of[k] = k % tau_p;
  return p;
}

/// Hermitian PSD square root with negative eigenvalues clipped at zero.
inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(matrix);
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Correlated Rayleigh channel realizations, one N x M block per UE-AP pair.
struct ChannelBatch {
  std::vector<std::vector<Eigen::MatrixXcd>> h;  // h[k][l]: N x M
  int realizations = 0;
  std::uint64_t seed = 0;
};

inline ChannelBatch sample_channels(const CorrelationSet& corr, int realizations,
                                    std::uint64_t seed) {
  ChannelBatch batch;
  batch.realizations = realizations;
  batch.seed = seed;
  const int num_ues = static_cast<int>(corr.spatial.size());
  batch.h.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) {
    const int num_aps = static_cast<int>(corr.spatial[k].size());
    batch.h[k].resize(num_aps);
    for (int l = 0; l < num_aps; ++l) {
      const Eigen::MatrixXcd& r = corr.spatial[k][l];
      const int n = static_cast<int>(r.rows());
      Eigen::MatrixXcd root = psd_sqrt(r);
      Rng rng(derive_seed(seed, seeds::kChannels,
                          static_cast<std::uint64_t>(k) * num_aps + l));
      Eigen::MatrixXcd iid(n, realizations);
      for (int m = 0; m < realizations; ++m)
        for (int a = 0; a < n; ++a) iid(a, m) = rng.complex_gaussian();
      batch.h[k][l] = root * iid;
    }
  }
  return batch;
}

/// MMSE channel estimates and their per-pair error covariances.
struct EstimateBatch {
  std::vector<std::vector<Eigen::MatrixXcd>> hhat;     // [k][l]: N x M
  std::vector<std::vector<Eigen::MatrixXcd>> err_cov;  // [k][l]: N x N
  int realizations = 0;
};

/// Linear MMSE estimation from the despread pilot observation
///   y = sqrt(p) * tau_p * sum_{i sharing pilot} h_i + noise, noise cov tau_p*sigma2*I,
/// giving hhat = sqrt(p) * R * Psi^{-1} * y with
///   Psi = sum_i p * tau_p * R_i + sigma2 * I,
/// and error covariance R - p * tau_p * R * Psi^{-1} * R.
inline EstimateBatch mmse_estimate(const ChannelBatch& batch,
                                   const PilotAssignment& pilots,
                                   const CorrelationSet& corr, double pilot_power,
                                   double noise_power) {
  const int num_ues = static_cast<int>(batch.h.size());
  if (num_ues == 0) return {};
  const int num_aps = static_cast<int>(batch.h[0].size());
  const int n = static_cast<int>(batch.h[0][0].rows());
  const int realizations = batch.realizations;
  const double tau_p = pilots.pilot_count;

  EstimateBatch est;
  est.realizations = realizations;
  est.hhat.assign(num_ues, std::vector<Eigen::MatrixXcd>(num_aps));
  est.err_cov.assign(num_ues, std::vector<Eigen::MatrixXcd>(num_aps));

  std::vector<std::vector<int>> sharers(pilots.pilot_count);
  for (int k = 0; k < num_ues; ++k) sharers[pilots.pilot_of[k]].push_back(k);

  const double amp = std::sqrt(pilot_power) * tau_p;         // pilot gain on h
  const double noise_scale = std::sqrt(tau_p * noise_power); // pilot noise std

  for (int l = 0; l < num_aps; ++l) {
    for (int t = 0; t < pilots.pilot_count; ++t) {
      if (sharers[t].empty()) continue;
      Eigen::MatrixXcd psi = noise_power * Eigen::MatrixXcd::Identity(n, n);
      for (int i : sharers[t]) psi += pilot_power * tau_p * corr.spatial[i][l];
      Eigen::LDLT<Eigen::MatrixXcd> solver(psi);

      // despread pilot observation for this (pilot, AP) pair
      Rng rng(derive_seed(batch.seed, seeds::kPilotNoise,
                          static_cast<std::uint64_t>(t) * num_aps + l));
      Eigen::MatrixXcd obs(n, realizations);
      for (int m = 0; m < realizations; ++m)
        for (int a = 0; a < n; ++a) obs(a, m) = noise_scale * rng.complex_gaussian();
      for (int i : sharers[t]) obs += amp * batch.h[i][l];

      Eigen::MatrixXcd psi_inv_obs = solver.solve(obs);
      for (int k : sharers[t]) {
        const Eigen::MatrixXcd& r = corr.spatial[k][l];
        est.hhat[k][l] = std::sqrt(pilot_power) * r * psi_inv_obs;
        Eigen::MatrixXcd c =
            r - pilot_power * tau_p * r * solver.solve(r);
        est.err_cov[k][l] = 0.5 * (c + c.adjoint());
      }
    }
  }
  return est;
}

inline void dump_topology_csv(const Topology& topo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "kind,index,x_m,y_m\n";
  for (std::size_t l = 0; l < topo.ap_xy.size(); ++l)
    out << "ap," << l << ',' << topo.ap_xy[l].x() << ',' << topo.ap_xy[l].y() << '\n';
  for (std::size_t k = 0; k < topo.ue_xy.size(); ++k)
    out << "ue," << k << ',' << topo.ue_xy[k].x() << ',' << topo.ue_xy[k].y() << '\n';
}

inline void dump_beta_csv(const CorrelationSet& corr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "ue,ap,beta_linear\n";
  out.precision(17);
  for (int k = 0; k < corr.beta.rows(); ++k)
    for (int l = 0; l < corr.beta.cols(); ++l)
      out << k << ',' << l << ',' << corr.beta(k, l) << '\n';
}

}  // namespace cfplan
