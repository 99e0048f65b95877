#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakevd/mle.hpp"
#include "peakevd/types.hpp"

// Likelihood ratio test (Gumbel null vs Frechet alternative) and the
// observed-Fisher-information standard deviation of the tail index estimate.
namespace peakevd::inference {

// CDF of the chi-square distribution with 1 degree of freedom:
// P(X <= x) = erf(sqrt(x/2)). std::erf is accurate to a few ulps.
inline double chi2_1_cdf(double x) {
  if (x < 0.0) throw std::invalid_argument("chi2_1_cdf: x must be >= 0");
  return std::erf(std::sqrt(0.5 * x));
}

struct LrtResult {
  double ell0 = 0.0;    // max log-likelihood under the Gumbel null
  double ell1 = 0.0;    // max log-likelihood under the Frechet alternative
  double lambda = 0.0;  // max(0, -2*(ell0 - ell1))
  double p_value = 1.0;
};

// The alternative is constrained to gamma >= gamma_th, so it can fit worse
// than the null; a negative raw statistic is optimizer/boundary noise and is
// clamped to 0.
inline LrtResult likelihood_ratio_test_from_fits(const mle::MleFit& h0,
                                                 const mle::MleFit& h1) {
  if (h0.formulation != Formulation::Gumbel || h1.formulation != Formulation::Frechet)
    throw std::invalid_argument(
        "likelihood ratio test compares a gumbel null against a frechet alternative");
  LrtResult r;
  r.ell0 = -h0.total_train_nll;
  r.ell1 = -h1.total_train_nll;
  r.lambda = std::max(0.0, -2.0 * (r.ell0 - r.ell1));
  r.p_value = 1.0 - chi2_1_cdf(r.lambda);
  return r;
}

// Fits both hypotheses on the full record set (no folds).
inline LrtResult likelihood_ratio_test(const std::vector<CustomerRecord>& records,
                                       std::uint64_t seed, double gamma_th = 1e-2,
                                       double eps_th = 1e-20) {
  const mle::MleFit h0 = mle::fit_mle(Formulation::Gumbel, records, seed, gamma_th, eps_th);
  const mle::MleFit h1 = mle::fit_mle(Formulation::Frechet, records, seed, gamma_th, eps_th);
  return likelihood_ratio_test_from_fits(h0, h1);
}

using Matrix = std::vector<std::vector<double>>;

namespace detail {

// Inverse via Gauss-Jordan elimination with partial pivoting.
inline Matrix invert_gepp(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw std::runtime_error("matrix is singular");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double m = a[r][col];
      if (m == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= m * a[col][j];
        inv[r][j] -= m * inv[col][j];
      }
    }
  }
  return inv;
}

// Positive definiteness of a symmetric matrix via the pivots of an
// unpivoted LDL^T factorization (all D entries positive iff PD). Partial
// pivoting cannot be used for this test: its pivots do not track inertia.
inline bool ldlt_is_pd(Matrix a) {
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(a[k][k] > 0.0)) return false;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
    }
  }
  return true;
}

}  // namespace detail

struct FisherResult {
  Matrix hessian;  // symmetrized central-difference Hessian of the total NLL
  std::vector<double> steps;  // finite-difference step actually used per axis
  double std_gamma = 0.0;
};

// Central-difference Hessian of `objective` at w_hat. Steps are chosen in two
// passes: a pilot pass with h_j = 1e-4 * max(|w_j|, 1) estimates the diagonal
// curvature, then each step is rescaled so the quadratic rise over it is
// ~1e-6 * (1 + |f0|). The rescaling matters when coordinates have wildly
// different curvature scales (e.g. a coefficient that multiplies sqrt(E)):
// a |w|-proportional step there turns third-order terms into errors larger
// than the smallest eigenvalue, making a true minimum look indefinite.
// Non-finite values anywhere on a stencil mean the optimum is too close to a
// support/parameter boundary.
inline FisherResult fisher_from_objective(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& w_hat) {
  const std::size_t n = w_hat.size();

  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    std::vector<double> w = w_hat;
    w[i] += di;
    if (j != i) w[j] += dj;
    const double v = objective(w);
    if (!std::isfinite(v))
      throw std::runtime_error(
          "Fisher information undefined: objective not finite near the optimum "
          "(estimate on or near a boundary)");
    return v;
  };

  const double f0 = at(0, 0.0, 0, 0.0);

  std::vector<double> h(n);
  for (std::size_t j = 0; j < n; ++j) h[j] = 1e-4 * std::max(std::fabs(w_hat[j]), 1.0);
  const double rise = 1e-6 * (1.0 + std::fabs(f0));
  for (std::size_t j = 0; j < n; ++j) {
    const double pilot =
        (at(j, h[j], j, 0.0) - 2.0 * f0 + at(j, -h[j], j, 0.0)) / (h[j] * h[j]);
    const double curv = std::max(std::fabs(pilot), 1e-8);
    const double scale = std::max(std::fabs(w_hat[j]), 1.0);
    h[j] = std::clamp(std::sqrt(2.0 * rise / curv), 1e-7 * scale, 0.1 * scale);
  }

  Matrix H(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    H[i][i] = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) -
                        at(i, -h[i], j, h[j]) + at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H[i][j] = v;
      H[j][i] = v;
    }
  }

  if (!detail::ldlt_is_pd(H))
    throw std::runtime_error("Fisher information not PD at optimum");
  const Matrix cov = detail::invert_gepp(H);

  FisherResult res;
  res.hessian = std::move(H);
  res.steps = std::move(h);
  res.std_gamma = std::sqrt(cov[n - 1][n - 1]);
  return res;
}

// Std(gamma_hat) for a fitted tail model: Hessian of the total (exact,
// unclamped) negative log-likelihood at the fitted parameter vector. The
// gamma coordinate is last, so std_gamma = sqrt((H^-1)[last][last]).
inline FisherResult fisher_std_gamma(const std::vector<CustomerRecord>& records,
                                     const mle::MleFit& fit, double gamma_th = 1e-2) {
  if (fit.w.size() != 4)
    throw std::invalid_argument("fisher_std_gamma requires a fitted tail model "
                                "(4-parameter formulation)");
  // Interior check: every finite bound must be further than the step away.
  // Checked twice: against the pilot step before evaluating anything, and
  // against the curvature-adapted steps the Hessian actually used.
  const optim::Bounds b = mle::mle_bounds(fit.formulation, gamma_th);
  auto check_interior = [&](std::size_t j, double h) {
    if ((std::isfinite(b.lower[j]) && fit.w[j] - b.lower[j] <= h) ||
        (std::isfinite(b.upper[j]) && b.upper[j] - fit.w[j] <= h))
      throw std::runtime_error("Fisher information undefined: estimate within a "
                               "finite-difference step of a parameter bound");
  };
  for (std::size_t j = 0; j < fit.w.size(); ++j)
    check_interior(j, 1e-4 * std::max(std::fabs(fit.w[j]), 1.0));
  auto objective = [&](const std::vector<double>& w) -> double {
    std::vector<std::string> bad;
    const double a = mle::anll_or_inf(fit.formulation, w, records, &bad, gamma_th);
    return a * static_cast<double>(records.size());
  };
  FisherResult res = fisher_from_objective(objective, fit.w);
  for (std::size_t j = 0; j < res.steps.size(); ++j) check_interior(j, res.steps[j]);
  return res;
}

}  // namespace peakevd::inference
