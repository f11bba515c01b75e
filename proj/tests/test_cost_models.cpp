#include <catch2/catch_amalgamated.hpp>

#include "cfplan/config.hpp"
#include "cfplan/cost_models.hpp"
#include "cfplan/rng.hpp"

using namespace cfplan;
using Catch::Approx;

TEST_CASE("filter load matches the 10-tap polyphase formula", "[cost]") {
  SystemConfig cfg;
  CHECK(filter_gops(cfg) == Approx(4.9152).epsilon(1e-12));

  SystemConfig none = cfg;
  none.antennas_per_ap = 0;
  CHECK(filter_gops(none) == 0.0);

  SystemConfig fast = cfg;
  fast.sampling_rate_hz *= 2;
  CHECK(filter_gops(fast) == Approx(2 * filter_gops(cfg)).epsilon(1e-12));
}

TEST_CASE("DFT load matches the FFT formula", "[cost]") {
  SystemConfig cfg;
  CHECK(dft_gops(cfg) == Approx(8.0 * 4 * 2048 * 11 / (71.4e-6 * 1e9)).epsilon(1e-12));
  CHECK(dft_gops(cfg) == Approx(10.0966).margin(5e-5));

  SystemConfig tiny = cfg;
  tiny.dft_size = 2;
  CHECK(dft_gops(tiny) == Approx(8.0 * 4 * 2 * 1 / (71.4e-6 * 1e9)).epsilon(1e-12));

  SystemConfig doubled = cfg;
  doubled.antennas_per_ap = 8;
  CHECK(dft_gops(doubled) == Approx(2 * dft_gops(cfg)).epsilon(1e-12));

  SystemConfig odd = cfg;
  odd.dft_size = 1200;
  CHECK_THROWS_AS(dft_gops(odd), std::invalid_argument);
}

TEST_CASE("precoding load evaluates all four terms and is affine in the served count",
          "[cost]") {
  SystemConfig cfg;
  const double kappa = 1200.0 / (71.4e-6 * 192 * 1e9);
  CHECK(kappa == Approx(8.7535e-5).epsilon(1e-4));

  PrecodingGops idle = precoding_gops(cfg, 0);
  CHECK(idle.channel_estimation == Approx(kappa * (2048 + 1024)).epsilon(1e-12));
  CHECK(idle.precoding == 0.0);
  CHECK(idle.reciprocity == 0.0);
  CHECK(idle.computation == Approx(kappa * (640 + 160)).epsilon(1e-12));
  CHECK(idle.total() == Approx(kappa * 3872).epsilon(1e-12));
  CHECK(idle.total() == Approx(0.33894).margin(5e-5));

  SystemConfig degenerate;
  degenerate.antennas_per_ap = 1;
  degenerate.pilot_length = 0;
  CHECK(precoding_gops(degenerate, 0).total() == 0.0);

  // finite-difference slope defines the per-served-UE coefficient
  for (int s = 0; s + 1 <= cfg.num_ues; ++s) {
    double diff = precoding_gops(cfg, s + 1).total() - precoding_gops(cfg, s).total();
    CHECK(diff == Approx(precoding_gops_per_served_ue(cfg)).epsilon(1e-12));
  }
  CHECK(precoding_gops_per_served_ue(cfg) ==
        Approx(kappa * (128 + 5888 + 32 + 128)).epsilon(1e-12));
}

TEST_CASE("load coefficients match the sum of their parts", "[cost]") {
  SystemConfig cfg;
  cfg.other_gops_per_ap = 0;
  cfg.other_gops_per_served_ue = 0;
  GopsCoefficients g = gops_coefficients(cfg);
  CHECK(g.per_active_ap == Approx(15.3507).margin(5e-4));
  CHECK(g.per_served_pair == Approx(0.54062).margin(5e-5));

  Eigen::VectorXi z = Eigen::VectorXi::Zero(cfg.num_aps);
  Eigen::MatrixXi x = Eigen::MatrixXi::Zero(cfg.num_ues, cfg.num_aps);
  CHECK(decomposed_cloud_gops(cfg, 0, 0) == cfg.fixed_gops);
  CHECK(direct_cloud_gops(cfg, z, x).total == cfg.fixed_gops);
}

TEST_CASE("decomposition equals the direct per-AP sum on random coupled patterns",
          "[cost]") {
  SystemConfig cfg;
  Rng rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXi z(cfg.num_aps);
    Eigen::MatrixXi x(cfg.num_ues, cfg.num_aps);
    for (int l = 0; l < cfg.num_aps; ++l) z(l) = rng.uniform() < 0.5 ? 1 : 0;
    for (int l = 0; l < cfg.num_aps; ++l)
      for (int k = 0; k < cfg.num_ues; ++k)
        x(k, l) = (z(l) == 1 && rng.uniform() < 0.5) ? 1 : 0;
    // an active AP must serve someone
    for (int l = 0; l < cfg.num_aps; ++l)
      if (z(l) == 1 && x.col(l).sum() == 0) x(static_cast<int>(rng.next_u64() % cfg.num_ues), l) = 1;

    double direct = direct_cloud_gops(cfg, z, x).total;
    double decomposed = decomposed_cloud_gops(cfg, z.sum(), x.sum());
    CHECK(direct == Approx(decomposed).epsilon(1e-9));
  }
}

TEST_CASE("AP power model matches the static-plus-slope form", "[cost]") {
  SystemConfig cfg;
  Eigen::VectorXd quiet = Eigen::VectorXd::Zero(cfg.num_ues);
  CHECK(ap_power(0, quiet, cfg) == 0.0);
  CHECK(ap_power(1, quiet, cfg) == Approx(27.2).epsilon(1e-12));

  Eigen::VectorXd one = quiet;
  one(2) = 1.0;  // rho^2 = 1 W toward one UE
  CHECK(ap_power(1, one, cfg) == Approx(31.2).epsilon(1e-12));
}

TEST_CASE("cloud power model matches the load-dependent GPP form", "[cost]") {
  SystemConfig cfg;
  CHECK(cloud_power(0, 0, 0.0, cfg) == Approx(120.0 / 0.9).epsilon(1e-12));
  CHECK(cloud_power(1, 1, 90.0, cfg) == Approx(197.8 / 0.9).epsilon(1e-12));

  SystemConfig bare = cfg;
  bare.cooling_efficiency = 1.0;
  bare.dispatcher_power_w = 0.0;
  CHECK(cloud_power(0, 0, 0.0, bare) == 0.0);

  CHECK_THROWS_AS(cloud_power(1, 4, 4 * 180.0 + 1.0, cfg), std::invalid_argument);
}

TEST_CASE("total power equals the regrouped planning objective", "[cost]") {
  SystemConfig cfg;
  DerivedParams d = derive(cfg);
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXi z(cfg.num_aps);
    Eigen::MatrixXi x = Eigen::MatrixXi::Zero(cfg.num_ues, cfg.num_aps);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(cfg.num_ues, cfg.num_aps);
    for (int l = 0; l < cfg.num_aps; ++l) z(l) = rng.uniform() < 0.6 ? 1 : 0;
    for (int l = 0; l < cfg.num_aps; ++l) {
      if (z(l) == 0) continue;
      bool any = false;
      for (int k = 0; k < cfg.num_ues; ++k) {
        if (rng.uniform() < 0.4) {
          x(k, l) = 1;
          rho(k, l) = rng.uniform() * std::sqrt(cfg.max_tx_power_w / cfg.num_ues);
          any = true;
        }
      }
      if (!any) z(l) = 0;
    }
    int nz = z.sum();
    int lcs = (nz + d.max_aps_per_wavelength - 1) / d.max_aps_per_wavelength;
    int dus = std::max(lcs, 1);
    PowerBreakdown p = total_power(z, x, rho, lcs, dus, cfg);
    CHECK(p.total ==
          Approx(p.ran + p.fronthaul + p.cloud_processing + p.dispatcher).epsilon(1e-12));
    CHECK(p.total == Approx(planning_objective(z, x, rho, lcs, dus, cfg)).epsilon(1e-9));
  }
}

TEST_CASE("power and load are monotone in activity", "[cost]") {
  SystemConfig cfg;
  Eigen::VectorXi z = Eigen::VectorXi::Zero(cfg.num_aps);
  Eigen::MatrixXi x = Eigen::MatrixXi::Zero(cfg.num_ues, cfg.num_aps);
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(cfg.num_ues, cfg.num_aps);
  double prev = total_power(z, x, rho, 1, 1, cfg).total;
  for (int l = 0; l < cfg.num_aps; ++l) {
    z(l) = 1;
    x(0, l) = 1;
    rho(0, l) = 0.1 * (l + 1) / cfg.num_aps;
    double cur = total_power(z, x, rho, 1, 1, cfg).total;
    CHECK(cur > prev);
    prev = cur;
  }
}
