#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "cfplan/config.hpp"

namespace cfplan {

/// Per-AP baseband filtering load: 10-tap polyphase filter, two real ops per
/// multiply to account for memory accesses.
inline double filter_gops(const SystemConfig& cfg) {
  return 40.0 * cfg.antennas_per_ap * cfg.sampling_rate_hz / 1e9;
}

/// Per-AP (I)DFT load via FFT, amortized over one OFDM symbol.
inline double dft_gops(const SystemConfig& cfg) {
  if (!detail::is_power_of_two(cfg.dft_size))
    throw std::invalid_argument("dft_gops: dft_size must be a power of two");
  double log2n = std::log2(static_cast<double>(cfg.dft_size));
  return 8.0 * cfg.antennas_per_ap * cfg.dft_size * log2n /
         (cfg.symbol_duration_s * 1e9);
}

/// The four labeled terms of the per-AP LP-MMSE processing load, as a
/// function of how many UEs the AP serves.
struct PrecodingGops {
  double channel_estimation = 0;
  double precoding = 0;
  double reciprocity = 0;
  double computation = 0;
  double total() const {
    return channel_estimation + precoding + reciprocity + computation;
  }
};

namespace detail {
inline double sample_rate_coeff(const SystemConfig& cfg) {
  return cfg.used_subcarriers / (cfg.symbol_duration_s * cfg.tau_c() * 1e9);
}
}  // namespace detail

inline PrecodingGops precoding_gops(const SystemConfig& cfg, int served_count) {
  if (served_count < 0 || served_count > cfg.num_ues)
    throw std::invalid_argument("precoding_gops: served_count out of range");
  const double n = cfg.antennas_per_ap;
  const double tau_p = cfg.pilot_length;
  const double tau_d = cfg.tau_c() - cfg.pilot_length;
  const double kappa = detail::sample_rate_coeff(cfg);
  const double s = served_count;
  PrecodingGops g;
  g.channel_estimation = kappa * (8.0 * n * tau_p * tau_p + 8.0 * n * n * (tau_p + s));
  g.precoding = kappa * tau_d * 8.0 * n * s;
  g.reciprocity = kappa * 8.0 * n * s;
  g.computation = kappa * ((4.0 * n * n + 4.0 * n) * tau_p + 8.0 * n * n * s +
                           8.0 * (n * n * n - n) / 3.0);
  return g;
}

/// Load added by one more served UE at an active AP; the slope of
/// precoding_gops in served_count.
inline double precoding_gops_per_served_ue(const SystemConfig& cfg) {
  const double n = cfg.antennas_per_ap;
  const double tau_d = cfg.tau_c() - cfg.pilot_length;
  return detail::sample_rate_coeff(cfg) *
         (8.0 * n * n + 8.0 * n * tau_d + 8.0 * n + 8.0 * n * n);
}

struct GopsCoefficients {
  double per_active_ap = 0;   // Z: multiplies the active-AP count
  double per_served_pair = 0; // X: multiplies the served (UE, AP) pair count
  double fixed = 0;           // F
};

/// Linear decomposition of the total cloud load. Exact for binary activity
/// patterns with the x <= z coupling, which is what the optimizer relies on.
inline GopsCoefficients gops_coefficients(const SystemConfig& cfg) {
  GopsCoefficients c;
  c.per_active_ap = filter_gops(cfg) + dft_gops(cfg) + cfg.other_gops_per_ap +
                    precoding_gops(cfg, 0).total();
  c.per_served_pair = precoding_gops_per_served_ue(cfg) + cfg.other_gops_per_served_ue;
  c.fixed = cfg.fixed_gops;
  return c;
}

inline double decomposed_cloud_gops(const SystemConfig& cfg, int active_aps,
                                    int served_pairs) {
  GopsCoefficients c = gops_coefficients(cfg);
  return c.per_active_ap * active_aps + c.per_served_pair * served_pairs + c.fixed;
}

/// Cloud load summed AP by AP from the underlying formulas, bypassing the
/// Z/X/F shortcut. z is the L-vector of AP activity, x the K-by-L serving map.
struct GopsBreakdown {
  double filter = 0;
  double dft = 0;
  double channel_estimation = 0;
  double precoding = 0;
  double reciprocity = 0;
  double computation = 0;
  double other_ap = 0;
  double other_ue = 0;
  double fixed = 0;
  double total = 0;
};

inline GopsBreakdown direct_cloud_gops(const SystemConfig& cfg,
                                       const Eigen::VectorXi& z,
                                       const Eigen::MatrixXi& x) {
  GopsBreakdown b;
  for (int l = 0; l < cfg.num_aps; ++l) {
    if (z(l) == 0) continue;
    int served = x.col(l).sum();
    PrecodingGops p = precoding_gops(cfg, served);
    b.filter += filter_gops(cfg);
    b.dft += dft_gops(cfg);
    b.channel_estimation += p.channel_estimation;
    b.precoding += p.precoding;
    b.reciprocity += p.reciprocity;
    b.computation += p.computation;
    b.other_ap += cfg.other_gops_per_ap;
  }
  b.other_ue = cfg.other_gops_per_served_ue * x.sum();
  b.fixed = cfg.fixed_gops;
  b.total = b.filter + b.dft + b.channel_estimation + b.precoding + b.reciprocity +
            b.computation + b.other_ap + b.other_ue + b.fixed;
  return b;
}

/// Radiated-site power of one AP: static part when active plus the PA slope
/// times the transmitted power. rho_row holds the per-UE sqrt-power entries.
inline double ap_power(int z, const Eigen::VectorXd& rho_row, const SystemConfig& cfg) {
  return z * cfg.ap_static_power() + cfg.tx_power_slope * rho_row.squaredNorm();
}

/// Cloud-side power: dispatcher, line cards, DU idle and load share, all
/// scaled by the cooling efficiency.
inline double cloud_power(int active_lcs, int active_dus, double gops_total,
                          const SystemConfig& cfg) {
  if (gops_total < 0 ||
      gops_total > cfg.num_dus * cfg.du_capacity_gops * (1.0 + 1e-9))
    throw std::invalid_argument("cloud_power: load outside [0, W * C_max]");
  return (cfg.dispatcher_power_w + cfg.olt_power_w * active_lcs +
          cfg.du_idle_power_w * active_dus +
          cfg.du_power_slope_w * gops_total / cfg.du_capacity_gops) /
         cfg.cooling_efficiency;
}

struct PowerBreakdown {
  double ran = 0;               // sum of AP power
  double fronthaul = 0;         // ONU per active AP + OLT per active LC
  double cloud_processing = 0;  // DU idle + load-dependent share
  double dispatcher = 0;
  double total = 0;
};

/// End-to-end network power for a full decision (z, x, rho, LC/DU counts).
inline PowerBreakdown total_power(const Eigen::VectorXi& z, const Eigen::MatrixXi& x,
                                  const Eigen::MatrixXd& rho, int active_lcs,
                                  int active_dus, const SystemConfig& cfg) {
  PowerBreakdown p;
  for (int l = 0; l < cfg.num_aps; ++l)
    p.ran += ap_power(z(l), rho.col(l), cfg);
  double gops = direct_cloud_gops(cfg, z, x).total;
  p.fronthaul = cfg.onu_power_w * z.sum() +
                cfg.olt_power_w * active_lcs / cfg.cooling_efficiency;
  p.cloud_processing = (cfg.du_idle_power_w * active_dus +
                        cfg.du_power_slope_w * gops / cfg.du_capacity_gops) /
                       cfg.cooling_efficiency;
  p.dispatcher = cfg.dispatcher_power_w / cfg.cooling_efficiency;
  p.total = p.ran + p.fronthaul + p.cloud_processing + p.dispatcher;
  return p;
}

/// The planner objective: same quantity as total_power, regrouped around the
/// per-active-AP coefficient P_l and the Z/X/F load decomposition.
inline double planning_objective(const Eigen::VectorXi& z, const Eigen::MatrixXi& x,
                                 const Eigen::MatrixXd& rho, int active_lcs,
                                 int active_dus, const SystemConfig& cfg) {
  GopsCoefficients g = gops_coefficients(cfg);
  const double sig = cfg.cooling_efficiency;
  const double cmax = cfg.du_capacity_gops;
  double p_l = cfg.ap_static_power() + cfg.onu_power_w +
               cfg.du_power_slope_w * g.per_active_ap / (cmax * sig);
  return cfg.dispatcher_power_w / sig + z.sum() * p_l +
         cfg.tx_power_slope * rho.squaredNorm() +
         cfg.olt_power_w / sig * active_lcs + cfg.du_idle_power_w / sig * active_dus +
         cfg.du_power_slope_w * g.per_served_pair / (sig * cmax) * x.sum() +
         cfg.du_power_slope_w * g.fixed / (sig * cmax);
}

/// Pure derivation of planner-facing constants from a validated config.
inline DerivedParams derive(const SystemConfig& cfg) {
  DerivedParams d;
  d.tau_c = cfg.tau_c();
  d.tau_d = d.tau_c - cfg.pilot_length;
  d.fronthaul_rate_bps =
      2.0 * cfg.sampling_rate_hz * cfg.quantizer_bits * cfg.antennas_per_ap;
  d.max_aps_per_wavelength = static_cast<int>(
      std::floor(cfg.wavelength_capacity_bps / d.fronthaul_rate_bps));
  if (d.max_aps_per_wavelength < 1)
    detail::fail_field("wavelength_capacity_bps", cfg.wavelength_capacity_bps,
                       "below the per-AP fronthaul rate; no AP fits a wavelength");
  GopsCoefficients g = gops_coefficients(cfg);
  d.z_coeff_gops = g.per_active_ap;
  d.x_coeff_gops = g.per_served_pair;
  d.f_coeff_gops = g.fixed;
  d.ap_activation_power_w =
      cfg.ap_static_power() + cfg.onu_power_w +
      cfg.du_power_slope_w * g.per_active_ap /
          (cfg.du_capacity_gops * cfg.cooling_efficiency);
  return d;
}

}  // namespace cfplan
