#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakevd/evd.hpp"
#include "peakevd/optim.hpp"
#include "peakevd/starts.hpp"
#include "peakevd/types.hpp"

// Multiple quantile regression: pinball/average-pinball-loss objective, the
// five model formulations with their parameter spaces, and fitting.
//
// Parameter vectors (quantile-regression parameterization):
//   gumbel    w = (theta0, A, B)                   theta0 >= 0, A >= 0
//   fgumbel   w = (theta0, A, B, gamma)            |gamma| <= gamma_th
//   frechet   w = (theta0, A/gamma, B - A/gamma, gamma)   w1 >= 0, gamma >= gamma_th
//   rweibull  same as frechet with                 w1 <= 0, gamma <= -gamma_th
// so that for gamma != 0 the predicted quantile is
//   Q(tau) = w0*E + (w1*(-ln tau)^(-gamma) + w2)*sqrt(E).
//   c4      w = (alpha, beta_1, ..., beta_m): one shared alpha, one beta per
//           grid level, constrained beta_1 <= ... <= beta_m.
namespace peakevd::mqr {

inline double pinball_loss(double tau, double delta) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("pinball_loss: tau must lie strictly in (0,1)");
  return delta < 0.0 ? (tau - 1.0) * delta : tau * delta;
}

inline std::size_t param_dim(Formulation f) {
  switch (f) {
    case Formulation::Gumbel: return 3;
    case Formulation::FuzzyGumbel:
    case Formulation::Frechet:
    case Formulation::ReverseWeibull: return 4;
    case Formulation::C4:
      throw std::invalid_argument("c4 dimension depends on the grid; not parametric");
  }
  throw std::logic_error("unreachable");
}

inline CanonicalParams from_mqr_w(Formulation f, const std::vector<double>& w) {
  CanonicalParams p;
  switch (f) {
    case Formulation::Gumbel:
      p.theta0 = w.at(0); p.scale_A = w.at(1); p.loc_B = w.at(2); p.gamma = 0.0;
      return p;
    case Formulation::FuzzyGumbel:
      p.theta0 = w.at(0); p.scale_A = w.at(1); p.loc_B = w.at(2); p.gamma = w.at(3);
      return p;
    case Formulation::Frechet:
    case Formulation::ReverseWeibull:
      p.theta0 = w.at(0); p.gamma = w.at(3);
      p.scale_A = w.at(1) * w.at(3);           // w1 = A/gamma
      p.loc_B = w.at(2) + w.at(1);             // w2 = B - A/gamma
      return p;
    case Formulation::C4:
      throw std::invalid_argument("c4 has no canonical parameters");
  }
  throw std::logic_error("unreachable");
}

inline std::vector<double> to_mqr_w(Formulation f, const CanonicalParams& p) {
  switch (f) {
    case Formulation::Gumbel:
      return {p.theta0, p.scale_A, p.loc_B};
    case Formulation::FuzzyGumbel:
      return {p.theta0, p.scale_A, p.loc_B, p.gamma};
    case Formulation::Frechet:
    case Formulation::ReverseWeibull: {
      if (p.gamma == 0.0)
        throw std::invalid_argument("gamma must be nonzero for this formulation");
      return {p.theta0, p.scale_A / p.gamma, p.loc_B - p.scale_A / p.gamma, p.gamma};
    }
    case Formulation::C4:
      throw std::invalid_argument("c4 has no canonical parameters");
  }
  throw std::logic_error("unreachable");
}

inline optim::Bounds mqr_bounds(Formulation f, double gamma_th = 1e-2) {
  const double inf = std::numeric_limits<double>::infinity();
  optim::Bounds b;
  switch (f) {
    case Formulation::Gumbel:
      b.lower = {0.0, 0.0, -inf};
      b.upper = {inf, inf, inf};
      return b;
    case Formulation::FuzzyGumbel:
      b.lower = {0.0, 0.0, -inf, -gamma_th};
      b.upper = {inf, inf, inf, gamma_th};
      return b;
    case Formulation::Frechet:
      b.lower = {0.0, 0.0, -inf, gamma_th};
      b.upper = {inf, inf, inf, inf};
      return b;
    case Formulation::ReverseWeibull:
      b.lower = {0.0, -inf, -inf, -inf};
      b.upper = {inf, 0.0, inf, -gamma_th};
      return b;
    case Formulation::C4:
      throw std::invalid_argument("c4 bounds are handled by its exact solver");
  }
  throw std::logic_error("unreachable");
}

// The sqrt(E) coefficient of the tau-quantile implied by w (parametric
// formulations only). fgumbel uses its defining degree-3 polynomial.
inline double beta_of_w(Formulation f, const std::vector<double>& w, double tau,
                        double gamma_th = 1e-2) {
  switch (f) {
    case Formulation::Gumbel:
      return -w.at(1) * std::log(-std::log(tau)) + w.at(2);
    case Formulation::FuzzyGumbel:
      return w.at(1) * evd::fgumbel_standard_quantile_taylor(tau, w.at(3), gamma_th) +
             w.at(2);
    case Formulation::Frechet:
    case Formulation::ReverseWeibull: {
      // w1*(-ln tau)^(-gamma) + w2
      const double L = std::log(-std::log(tau));
      return w.at(1) * std::exp(-w.at(3) * L) + w.at(2);
    }
    case Formulation::C4:
      throw std::invalid_argument("use the grid-indexed beta for c4");
  }
  throw std::logic_error("unreachable");
}

// Predicted tau-quantile of the peak for a customer with the given energy.
// C4 defines quantiles only at its fitted grid levels; `grid` is required
// there and ignored otherwise.
inline double predict_quantile(Formulation f, const std::vector<double>& w, double tau,
                               double energy, const QuantileGrid* grid = nullptr,
                               double gamma_th = 1e-2) {
  if (!(energy > 0.0)) throw std::invalid_argument("predict_quantile: energy must be > 0");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("predict_quantile: tau must lie strictly in (0,1)");
  if (f == Formulation::C4) {
    if (grid == nullptr)
      throw std::invalid_argument("predict_quantile: c4 requires its fitted grid");
    for (std::size_t i = 0; i < grid->taus.size(); ++i) {
      if (std::fabs(grid->taus[i] - tau) < 1e-12)
        return w.at(0) * energy + w.at(i + 1) * std::sqrt(energy);
    }
    throw std::invalid_argument("predict_quantile: c4 defines no quantile at tau=" +
                                std::to_string(tau) + " (off the fitted grid)");
  }
  return w.at(0) * energy + beta_of_w(f, w, tau, gamma_th) * std::sqrt(energy);
}

// Average pinball loss over records and grid levels.
inline double apl(Formulation f, const std::vector<double>& w,
                  const std::vector<CustomerRecord>& records, const QuantileGrid& grid,
                  double gamma_th = 1e-2) {
  if (records.empty()) throw std::invalid_argument("apl: no records");
  if (grid.taus.empty()) throw std::invalid_argument("apl: empty quantile grid");
  double total = 0.0;
  for (double tau : grid.taus) {
    for (const auto& r : records) {
      const double q = predict_quantile(f, w, tau, r.energy, &grid, gamma_th);
      total += pinball_loss(tau, r.peak - q);
    }
  }
  return total / (static_cast<double>(records.size()) *
                  static_cast<double>(grid.taus.size()));
}

struct MqrFit {
  Formulation formulation = Formulation::Gumbel;
  std::vector<double> w;                  // c4: [alpha, beta_1..beta_m]
  std::optional<CanonicalParams> params;  // absent for c4
  double train_apl = 0.0;
  QuantileGrid grid;
  optim::OptimResult diag;
};

namespace detail {

inline void check_fit_inputs(const std::vector<CustomerRecord>& records,
                             std::size_t min_count) {
  if (records.size() < min_count)
    throw std::invalid_argument("fit requires at least " + std::to_string(min_count) +
                                " records, got " + std::to_string(records.size()));
  for (const auto& r : records) {
    if (!(r.energy > 0.0))
      throw std::invalid_argument("fit: record '" + r.customer_id +
                                  "' has non-positive energy");
    if (!std::isfinite(r.peak))
      throw std::invalid_argument("fit: record '" + r.customer_id +
                                  "' has non-finite peak");
  }
}

// Fast APL objective: precomputes sqrt(E) and the per-level ln(-ln tau).
class AplObjective {
 public:
  AplObjective(Formulation f, const std::vector<CustomerRecord>& records,
               const QuantileGrid& grid)
      : f_(f), taus_(grid.taus) {
    e_.reserve(records.size());
    s_.reserve(records.size());
    p_.reserve(records.size());
    for (const auto& r : records) {
      e_.push_back(r.energy);
      s_.push_back(std::sqrt(r.energy));
      p_.push_back(r.peak);
    }
    ls_.reserve(taus_.size());
    for (double tau : taus_) ls_.push_back(std::log(-std::log(tau)));
  }

  double operator()(const std::vector<double>& w) const {
    double total = 0.0;
    const std::size_t n = e_.size();
    for (std::size_t t = 0; t < taus_.size(); ++t) {
      const double beta = beta_at(w, t);
      if (!std::isfinite(beta)) return std::numeric_limits<double>::infinity();
      const double tau = taus_[t];
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = p_[i] - w[0] * e_[i] - beta * s_[i];
        total += delta < 0.0 ? (tau - 1.0) * delta : tau * delta;
      }
    }
    return total / (static_cast<double>(n) * static_cast<double>(taus_.size()));
  }

 private:
  double beta_at(const std::vector<double>& w, std::size_t t) const {
    const double L = ls_[t];
    switch (f_) {
      case Formulation::Gumbel:
        return -w[1] * L + w[2];
      case Formulation::FuzzyGumbel: {
        const double g = w[3];
        return w[1] * (-L + g * L * L / 2.0 - g * g * L * L * L / 6.0 +
                       g * g * g * L * L * L * L / 24.0) +
               w[2];
      }
      default:  // frechet / rweibull
        return w[1] * std::exp(-w[3] * L) + w[2];
    }
  }

  Formulation f_;
  std::vector<double> taus_, ls_, e_, s_, p_;
};

}  // namespace detail

// Quantile-regression fit of a parametric formulation: moment-based start,
// seeded perturbations, and (for the gamma-extended formulations) a warm
// start at the fitted Gumbel solution so the richer model never ends up
// worse than its nested special case.
inline MqrFit fit_parametric(Formulation f, const std::vector<CustomerRecord>& records,
                             const QuantileGrid& grid, std::uint64_t seed,
                             double gamma_th = 1e-2, const optim::OptimConfig& cfg = {}) {
  if (f == Formulation::C4)
    throw std::invalid_argument("use fit_c4 for the constrained grid formulation");
  if (grid.taus.empty()) throw std::invalid_argument("fit: empty quantile grid");
  detail::check_fit_inputs(records, param_dim(f) + 1);

  CanonicalParams p0 = starts::moment_start(records);
  switch (f) {
    case Formulation::FuzzyGumbel: p0.gamma = 0.0; break;
    case Formulation::Frechet: p0.gamma = 10.0 * gamma_th; break;
    case Formulation::ReverseWeibull: p0.gamma = -10.0 * gamma_th; break;
    default: break;
  }
  const optim::Bounds bounds = mqr_bounds(f, gamma_th);
  std::vector<double> base = to_mqr_w(f, p0);
  bounds.project(base);

  auto start_list = starts::perturbed_starts(base, bounds, seed);
  if (f != Formulation::Gumbel) {
    MqrFit g = fit_parametric(Formulation::Gumbel, records, grid, seed, gamma_th, cfg);
    CanonicalParams warm = *g.params;
    warm.gamma = f == Formulation::FuzzyGumbel ? 0.0
                 : f == Formulation::Frechet   ? gamma_th
                                               : -gamma_th;
    std::vector<double> w_warm = to_mqr_w(f, warm);
    bounds.project(w_warm);
    start_list.push_back(std::move(w_warm));
  }

  detail::AplObjective obj(f, records, grid);
  optim::OptimResult best = optim::multistart_minimize(obj, start_list, bounds, seed, cfg);

  MqrFit fit;
  fit.formulation = f;
  fit.w = best.x;
  fit.params = from_mqr_w(f, best.x);
  fit.train_apl = best.fval;
  fit.grid = grid;
  fit.diag = std::move(best);
  return fit;
}

namespace detail {

// Exact inner solver for the shared-alpha grid formulation. For fixed alpha
// the per-level problem min_beta sum_i u_i * PL(tau, c_i - beta), with
// c_i = (P_i - alpha*E_i)/sqrt(E_i) and u_i = sqrt(E_i), is solved exactly by
// a weighted quantile; monotonicity across levels is then restored by
// pool-adjacent-violators (pooled blocks minimize at the weighted quantile of
// the mean level). The outer objective is convex in alpha, so golden-section
// search finds the optimum.
class C4Inner {
 public:
  C4Inner(const std::vector<CustomerRecord>& records, const QuantileGrid& grid)
      : taus_(grid.taus) {
    const std::size_t n = records.size();
    e_.reserve(n);
    u_.reserve(n);
    p_.reserve(n);
    for (const auto& r : records) {
      e_.push_back(r.energy);
      u_.push_back(std::sqrt(r.energy));
      p_.push_back(r.peak);
    }
    c_.resize(n);
    order_.resize(n);
    cumw_.resize(n);
    cumwc_.resize(n);
  }

  // Optimal monotone betas for this alpha and the resulting average loss.
  double solve(double alpha, std::vector<double>* betas_out = nullptr) {
    const std::size_t n = e_.size();
    for (std::size_t i = 0; i < n; ++i) c_[i] = (p_[i] - alpha * e_[i]) / u_[i];
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      if (c_[a] != c_[b]) return c_[a] < c_[b];
      return a < b;
    });
    double acc_w = 0.0, acc_wc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc_w += u_[order_[k]];
      acc_wc += u_[order_[k]] * c_[order_[k]];
      cumw_[k] = acc_w;
      cumwc_[k] = acc_wc;
    }
    total_w_ = acc_w;
    total_wc_ = acc_wc;

    // Per-level exact solutions (already non-decreasing in tau), then a PAV
    // pass as a guard for ties/degenerate weights.
    const std::size_t m = taus_.size();
    std::vector<double> beta(m);
    for (std::size_t t = 0; t < m; ++t) beta[t] = weighted_quantile(taus_[t]);
    std::vector<double> block_tau_sum(m), block_beta(m);
    std::vector<std::size_t> block_len(m);
    std::size_t nb = 0;
    for (std::size_t t = 0; t < m; ++t) {
      block_tau_sum[nb] = taus_[t];
      block_len[nb] = 1;
      block_beta[nb] = beta[t];
      ++nb;
      while (nb > 1 && block_beta[nb - 2] > block_beta[nb - 1]) {
        block_tau_sum[nb - 2] += block_tau_sum[nb - 1];
        block_len[nb - 2] += block_len[nb - 1];
        --nb;
        block_beta[nb - 1] = weighted_quantile(block_tau_sum[nb - 1] /
                                               static_cast<double>(block_len[nb - 1]));
      }
    }
    std::size_t t = 0;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t k = 0; k < block_len[b]; ++k) beta[t++] = block_beta[b];

    double total = 0.0;
    for (std::size_t ti = 0; ti < m; ++ti) total += level_loss(taus_[ti], beta[ti]);
    if (betas_out) *betas_out = beta;
    return total / (static_cast<double>(n) * static_cast<double>(m));
  }

  double max_ratio() const {
    double r = 0.0;
    for (std::size_t i = 0; i < e_.size(); ++i) r = std::max(r, p_[i] / e_[i]);
    return r;
  }

 private:
  // Smallest sorted c with cumulative weight >= tau * total (ties toward the
  // smaller beta for determinism).
  double weighted_quantile(double tau) const {
    const double target = tau * total_w_;
    auto it = std::lower_bound(cumw_.begin(), cumw_.end(), target);
    if (it == cumw_.end()) --it;  // guard against fp rounding at tau ~ 1
    return c_[order_[static_cast<std::size_t>(it - cumw_.begin())]];
  }

  // sum_i u_i * PL(tau, c_i - beta) via the prefix sums.
  double level_loss(double tau, double beta) const {
    // Number of sorted entries with c <= beta.
    auto it = std::upper_bound(order_.begin(), order_.end(), beta,
                               [&](double v, std::size_t idx) { return v < c_[idx]; });
    const std::size_t k = static_cast<std::size_t>(it - order_.begin());
    const double w_le = k == 0 ? 0.0 : cumw_[k - 1];
    const double wc_le = k == 0 ? 0.0 : cumwc_[k - 1];
    const double below = (1.0 - tau) * (beta * w_le - wc_le);
    const double above = tau * ((total_wc_ - wc_le) - beta * (total_w_ - w_le));
    return below + above;
  }

  std::vector<double> taus_, e_, u_, p_, c_;
  std::vector<std::size_t> order_;
  std::vector<double> cumw_, cumwc_;
  double total_w_ = 0.0, total_wc_ = 0.0;
};

}  // namespace detail

// Exact fit of the shared-alpha, monotone-beta grid formulation.
// Deterministic; the seed parameter is accepted for interface symmetry.
inline MqrFit fit_c4(const std::vector<CustomerRecord>& records, const QuantileGrid& grid,
                     std::uint64_t /*seed*/ = 0) {
  if (grid.taus.empty()) throw std::invalid_argument("fit: empty quantile grid");
  detail::check_fit_inputs(records, 1);

  detail::C4Inner inner(records, grid);
  double lo = 0.0, hi = std::max(0.0, inner.max_ratio());
  std::size_t evals = 0;
  double best_alpha = 0.0, best_val = std::numeric_limits<double>::infinity();
  auto probe = [&](double a) {
    ++evals;
    const double v = inner.solve(a);
    if (v < best_val || (v == best_val && a < best_alpha)) {
      best_val = v;
      best_alpha = a;
    }
    return v;
  };

  probe(lo);
  probe(hi);
  const double invphi = 0.6180339887498949;  // 1/golden ratio
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = probe(x1);
  double f2 = probe(x2);
  const double tol = 1e-12 * std::max(1.0, hi);
  while (hi - lo > tol && evals < 400) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = probe(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = probe(x2);
    }
  }

  std::vector<double> betas;
  const double val = inner.solve(best_alpha, &betas);

  MqrFit fit;
  fit.formulation = Formulation::C4;
  fit.w.reserve(1 + betas.size());
  fit.w.push_back(best_alpha);
  fit.w.insert(fit.w.end(), betas.begin(), betas.end());
  fit.train_apl = val;
  fit.grid = grid;
  fit.diag.x = fit.w;
  fit.diag.fval = val;
  fit.diag.evals = evals;
  fit.diag.converged = true;
  fit.diag.restarts = 0;
  return fit;
}

}  // namespace peakevd::mqr
