#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "peakevd/evd.hpp"
#include "peakevd/rng.hpp"

using namespace peakevd;

// Frozen reference values (60-digit arithmetic, truncated to double precision).
namespace oracle {
constexpr double kGumbelCdfAt1 = 0.692200627555346353865;   // exp(-exp(-1))
constexpr double kGumbelQAtHalf = 0.366512920581664327012;  // -ln(-ln 0.5)
constexpr double kG_09_p05 = 4.16156524952220335602;        // g(0.9, 0.5)
constexpr double kG_025_m03 = -0.343173540497495872506;     // g(0.25, -0.3)
constexpr double kG_099_p02 = 7.54682640858578344476;       // g(0.99, 0.2)
constexpr double kG_01_m05 = -1.03485425877029270173;       // g(0.1, -0.5)
constexpr double kG_037_p001 = 0.0057644745452090200566;    // g(0.37, 0.01)
constexpr double kG_05_1em6 = 0.366512987747533009382;      // g(0.5, 1e-6)
constexpr double kCdf_2_p05 = 0.778800783071404868245;      // F(2; gamma=0.5)
constexpr double kCdf_m1_m05 = 0.105399224561864336783;     // F(-1; gamma=-0.5)
constexpr double kPdfGumbel_07 = 0.302224456630968486147;   // phi(0.7; gamma=0)
constexpr double kPdfGev_2_p05 = 0.0973500978839256085306;  // phi(2; gamma=0.5)
}  // namespace oracle

TEST_CASE("standard quantile transform matches frozen references") {
  CHECK(evd::standard_quantile(0.5, 0.0) ==
        Catch::Approx(oracle::kGumbelQAtHalf).epsilon(1e-15));
  CHECK(evd::standard_quantile(0.9, 0.5) ==
        Catch::Approx(oracle::kG_09_p05).epsilon(1e-15));
  CHECK(evd::standard_quantile(0.25, -0.3) ==
        Catch::Approx(oracle::kG_025_m03).epsilon(1e-15));
  CHECK(evd::standard_quantile(0.99, 0.2) ==
        Catch::Approx(oracle::kG_099_p02).epsilon(1e-15));
  CHECK(evd::standard_quantile(0.1, -0.5) ==
        Catch::Approx(oracle::kG_01_m05).epsilon(1e-15));
  CHECK(evd::standard_quantile(0.37, 0.01) ==
        Catch::Approx(oracle::kG_037_p001).epsilon(1e-14));
  // Tiny nonzero gamma stays accurate (expm1 branch, no cancellation).
  CHECK(evd::standard_quantile(0.5, 1e-6) ==
        Catch::Approx(oracle::kG_05_1em6).epsilon(1e-14));

  CHECK_THROWS_AS(evd::standard_quantile(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(evd::standard_quantile(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("standard GEV CDF matches frozen references and guards its support") {
  CHECK(evd::standard_gev_cdf(1.0, 0.0) ==
        Catch::Approx(oracle::kGumbelCdfAt1).epsilon(1e-15));
  CHECK(evd::standard_gev_cdf(2.0, 0.5) ==
        Catch::Approx(oracle::kCdf_2_p05).epsilon(1e-15));
  CHECK(evd::standard_gev_cdf(-1.0, -0.5) ==
        Catch::Approx(oracle::kCdf_m1_m05).epsilon(1e-15));

  // 1 + gamma*x <= 0 is outside the distribution's support.
  CHECK_THROWS_AS(evd::standard_gev_cdf(-2.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(evd::standard_gev_cdf(2.5, -0.5), std::domain_error);
}

TEST_CASE("quantile and CDF invert each other across the gamma range") {
  const std::vector<double> gammas{-0.5, -0.01, 0.0, 0.01, 0.5};
  const std::vector<double> energies{0.5, 40.0, 1e6};
  CanonicalParams p;
  p.theta0 = 0.05;
  p.scale_A = 1.3;
  p.loc_B = 0.4;

  Rng rng(2024);
  for (double g : gammas) {
    p.gamma = g;
    for (double e : energies) {
      for (int i = 0; i < 50; ++i) {
        const double tau = rng.uniform(1e-6, 1.0 - 1e-6);
        const double y = evd::peak_qf(tau, e, p);
        CHECK(evd::peak_cdf(y, e, p) == Catch::Approx(tau).margin(1e-10));
      }
    }
  }
}

TEST_CASE("peak_pdf matches frozen standardized densities") {
  CanonicalParams p;  // A = 1, B = 0, theta0 = 0 and E = 1: pdf(y) = phi(z = y)
  p.theta0 = 0.0;
  p.scale_A = 1.0;
  p.loc_B = 0.0;

  p.gamma = 0.0;
  CHECK(evd::peak_pdf(0.7, 1.0, p) ==
        Catch::Approx(oracle::kPdfGumbel_07).epsilon(1e-14));
  p.gamma = 0.5;
  CHECK(evd::peak_pdf(2.0, 1.0, p) ==
        Catch::Approx(oracle::kPdfGev_2_p05).epsilon(1e-14));
}

TEST_CASE("peak_pdf is the derivative of peak_cdf") {
  CanonicalParams p;
  p.theta0 = 0.08;
  p.scale_A = 2.1;
  p.loc_B = -0.6;
  for (double g : {-0.5, 0.0, 0.4}) {
    p.gamma = g;
    const double e = 250.0;
    const double scale = p.scale_A * std::sqrt(e);
    for (double tau : {0.05, 0.3, 0.5, 0.8, 0.97}) {
      const double y = evd::peak_qf(tau, e, p);
      const double h = 1e-5 * scale;
      const double fd =
          (evd::peak_cdf(y + h, e, p) - evd::peak_cdf(y - h, e, p)) / (2.0 * h);
      CHECK(evd::peak_pdf(y, e, p) == Catch::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("support interval bounds the density and the CDF saturates outside") {
  CanonicalParams p;
  p.theta0 = 0.05;
  p.scale_A = 1.5;
  p.loc_B = 0.2;
  const double e = 900.0;

  SECTION("heavy tail: bounded below") {
    p.gamma = 0.5;
    const auto s = evd::support_interval(e, p);
    CHECK(s.lower ==
          Catch::Approx(p.theta0 * e + (p.loc_B - p.scale_A / p.gamma) * std::sqrt(e)));
    CHECK(std::isinf(s.upper));
    CHECK(evd::peak_cdf(s.lower - 1.0, e, p) == 0.0);
    CHECK(evd::peak_pdf(s.lower - 1.0, e, p) == 0.0);
    CHECK(evd::peak_cdf(s.lower + 1e3 * std::sqrt(e), e, p) > 0.5);
  }

  SECTION("bounded tail: finite upper endpoint") {
    p.gamma = -0.5;
    const auto s = evd::support_interval(e, p);
    CHECK(std::isinf(s.lower));
    CHECK(s.upper ==
          Catch::Approx(p.theta0 * e + (p.loc_B - p.scale_A / p.gamma) * std::sqrt(e)));
    CHECK(evd::peak_cdf(s.upper + 1.0, e, p) == 1.0);
    CHECK(evd::peak_pdf(s.upper + 1.0, e, p) == 0.0);
  }

  SECTION("gumbel: unbounded both sides") {
    p.gamma = 0.0;
    const auto s = evd::support_interval(e, p);
    CHECK(std::isinf(s.lower));
    CHECK(std::isinf(s.upper));
  }
}

TEST_CASE("z_transform and argument validation") {
  CanonicalParams p;
  p.theta0 = 0.1;
  p.scale_A = 2.0;
  p.loc_B = 1.0;
  const double e = 400.0;
  const double y = p.theta0 * e + (p.scale_A * 0.75 + p.loc_B) * std::sqrt(e);
  CHECK(evd::z_transform(y, e, p) == Catch::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(evd::z_transform(1.0, 0.0, p), std::invalid_argument);
  p.scale_A = 0.0;
  CHECK_THROWS_AS(evd::z_transform(1.0, 1.0, p), std::invalid_argument);
  CHECK_THROWS_AS(evd::peak_qf(0.5, -1.0, p), std::invalid_argument);
}

TEST_CASE("beta_tau composes the quantile transform with scale and location") {
  CanonicalParams p;
  p.scale_A = 1.7;
  p.loc_B = -0.3;
  p.gamma = 0.5;
  CHECK(evd::beta_tau(0.9, p) ==
        Catch::Approx(1.7 * oracle::kG_09_p05 - 0.3).epsilon(1e-14));
  p.gamma = 0.0;
  CHECK(evd::beta_tau(0.5, p) ==
        Catch::Approx(1.7 * oracle::kGumbelQAtHalf - 0.3).epsilon(1e-14));
}

TEST_CASE("cubic quantile polynomial agrees with the exact transform at gamma 0") {
  for (double tau : {0.01, 0.1, 0.5, 0.9, 0.99}) {
    CHECK(evd::fgumbel_standard_quantile_taylor(tau, 0.0) ==
          evd::standard_quantile(tau, 0.0));
  }
}

TEST_CASE("cubic quantile polynomial tracks the exact transform inside the band") {
  for (double g : {-1e-2, -1e-3, 1e-3, 1e-2}) {
    for (double tau = 0.01; tau < 0.995; tau += 0.01) {
      const double approx = evd::fgumbel_standard_quantile_taylor(tau, g);
      const double exact = evd::standard_quantile(tau, g);
      CHECK(std::fabs(approx - exact) < 1e-5);
    }
  }
  CHECK_THROWS_AS(evd::fgumbel_standard_quantile_taylor(0.5, 0.02),
                  std::invalid_argument);
  // A wider band is allowed when requested explicitly.
  CHECK_NOTHROW(evd::fgumbel_standard_quantile_taylor(0.5, 0.02, 0.05));
}

TEST_CASE("fgumbel beta and quantile wrappers share the polynomial transform") {
  CanonicalParams p;
  p.theta0 = 0.05;
  p.scale_A = 1.2;
  p.loc_B = 0.7;
  p.gamma = 0.008;
  const double tau = 0.42, e = 3600.0;
  const double g = evd::fgumbel_standard_quantile_taylor(tau, p.gamma);
  CHECK(evd::fgumbel_beta_tau(tau, p) == Catch::Approx(1.2 * g + 0.7).epsilon(1e-14));
  CHECK(evd::fgumbel_qf_taylor(tau, e, p) ==
        Catch::Approx(0.05 * e + (1.2 * g + 0.7) * 60.0).epsilon(1e-14));
}
