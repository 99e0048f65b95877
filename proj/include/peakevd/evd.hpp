#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "peakevd/types.hpp"

// Distribution math for the peak-load model. A customer with annual energy E
// has peak quantile Q(tau) = theta0*E + (A*g_gamma(tau) + B)*sqrt(E), where
// g_gamma is the standardized extreme-value quantile transform:
//   gamma  = 0: g(tau) = -ln(-ln tau)
//   gamma != 0: g(tau) = ((-ln tau)^(-gamma) - 1) / gamma
// All densities/CDFs below are the matching location-scale extreme value
// distributions expressed through z = (y - theta0*E - B*sqrt(E)) / (A*sqrt(E)).
namespace peakevd::evd {

// |gamma| below this is evaluated on the gamma = 0 branch; the exact branch is
// catastrophically ill-conditioned that close to zero.
inline constexpr double kGammaZeroTol = 1e-12;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// CDF of the standardized extreme value distribution at x.
// gamma = 0: exp(-exp(-x)); otherwise exp(-(1+gamma*x)^(-1/gamma)), defined
// only where 1+gamma*x > 0. Out-of-support arguments are an error here (the
// customer-level peak_cdf below is total instead).
inline double standard_gev_cdf(double x, double gamma) {
  if (std::fabs(gamma) < kGammaZeroTol) return std::exp(-std::exp(-x));
  const double t = 1.0 + gamma * x;
  if (t <= 0.0) {
    if (gamma > 0.0)
      throw std::domain_error("standard_gev_cdf: x below support (CDF 0 side)");
    throw std::domain_error("standard_gev_cdf: x above support (CDF 1 side)");
  }
  return std::exp(-std::pow(t, -1.0 / gamma));
}

// z(y) = y/(A*sqrt(E)) - theta0*sqrt(E)/A - B/A.
inline double z_transform(double y, double energy, const CanonicalParams& p) {
  if (!(energy > 0.0)) throw std::invalid_argument("z_transform: energy must be > 0");
  if (!(p.scale_A > 0.0)) throw std::invalid_argument("z_transform: scale_A must be > 0");
  const double s = std::sqrt(energy);
  return y / (p.scale_A * s) - p.theta0 * s / p.scale_A - p.loc_B / p.scale_A;
}

// Support of the peak distribution in y.
struct Support {
  double lower;  // -inf when unbounded below
  double upper;  // +inf when unbounded above
};

inline Support support_interval(double energy, const CanonicalParams& p) {
  if (!(energy > 0.0)) throw std::invalid_argument("support_interval: energy must be > 0");
  if (std::fabs(p.gamma) < kGammaZeroTol) return {-kInf, kInf};
  const double s = std::sqrt(energy);
  // 1 + gamma*z > 0  <=>  z > -1/gamma (gamma>0) or z < -1/gamma (gamma<0).
  const double edge = p.theta0 * energy + (p.loc_B - p.scale_A / p.gamma) * s;
  if (p.gamma > 0.0) return {edge, kInf};
  return {-kInf, edge};
}

// CDF of the customer's peak at y. Total: returns 0 below / 1 above support.
inline double peak_cdf(double y, double energy, const CanonicalParams& p) {
  const double z = z_transform(y, energy, p);
  if (std::fabs(p.gamma) < kGammaZeroTol) return std::exp(-std::exp(-z));
  const double t = 1.0 + p.gamma * z;
  if (t <= 0.0) return p.gamma > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log(t) / p.gamma));
}

// PDF of the customer's peak at y (1/kW). Zero outside the support. Evaluated
// in log space so the support edges underflow to 0 instead of producing NaN.
inline double peak_pdf(double y, double energy, const CanonicalParams& p) {
  const double z = z_transform(y, energy, p);
  const double log_scale = std::log(p.scale_A) + 0.5 * std::log(energy);
  if (std::fabs(p.gamma) < kGammaZeroTol) {
    return std::exp(-z - std::exp(-z) - log_scale);
  }
  const double t = 1.0 + p.gamma * z;
  if (t <= 0.0) return 0.0;
  const double lt = std::log(t);
  const double u = std::exp(-lt / p.gamma);  // (1+gamma*z)^(-1/gamma)
  if (!std::isfinite(u)) return 0.0;         // deep lower tail, gamma > 0
  return std::exp((-1.0 / p.gamma - 1.0) * lt - u - log_scale);
}

// Standardized quantile transform g_gamma(tau); equals -ln(-ln tau) at
// gamma = 0. expm1 keeps the gamma != 0 branch stable for small |gamma|.
inline double standard_quantile(double tau, double gamma) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantile level must lie strictly in (0,1)");
  const double L = std::log(-std::log(tau));  // ln(-ln tau)
  if (std::fabs(gamma) < kGammaZeroTol) return -L;
  return std::expm1(-gamma * L) / gamma;  // ((-ln tau)^(-gamma) - 1)/gamma
}

// beta_tau: the sqrt(E) coefficient of the tau-quantile, A*g_gamma(tau) + B.
inline double beta_tau(double tau, const CanonicalParams& p) {
  return p.scale_A * standard_quantile(tau, p.gamma) + p.loc_B;
}

// Quantile function of the customer's peak.
inline double peak_qf(double tau, double energy, const CanonicalParams& p) {
  if (!(energy > 0.0)) throw std::invalid_argument("peak_qf: energy must be > 0");
  return p.theta0 * energy + beta_tau(tau, p) * std::sqrt(energy);
}

// Degree-3 polynomial (in gamma) of g_gamma(tau) around gamma = 0, with
// L = ln(-ln tau): -L + gamma*L^2/2 - gamma^2*L^3/6 + gamma^3*L^4/24.
// This is the quantile transform the fuzzy-Gumbel formulation is defined by;
// it is only meaningful inside |gamma| <= gamma_th.
inline double fgumbel_standard_quantile_taylor(double tau, double gamma,
                                               double gamma_th = 1e-2) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantile level must lie strictly in (0,1)");
  if (std::fabs(gamma) > gamma_th)
    throw std::invalid_argument("fuzzy-Gumbel quantile requires |gamma| <= gamma_th");
  const double L = std::log(-std::log(tau));
  return -L + gamma * L * L / 2.0 - gamma * gamma * L * L * L / 6.0 +
         gamma * gamma * gamma * L * L * L * L / 24.0;
}

inline double fgumbel_beta_tau(double tau, const CanonicalParams& p,
                               double gamma_th = 1e-2) {
  return p.scale_A * fgumbel_standard_quantile_taylor(tau, p.gamma, gamma_th) + p.loc_B;
}

inline double fgumbel_qf_taylor(double tau, double energy, const CanonicalParams& p,
                                double gamma_th = 1e-2) {
  if (!(energy > 0.0)) throw std::invalid_argument("fgumbel_qf_taylor: energy must be > 0");
  return p.theta0 * energy + fgumbel_beta_tau(tau, p, gamma_th) * std::sqrt(energy);
}

}  // namespace peakevd::evd
