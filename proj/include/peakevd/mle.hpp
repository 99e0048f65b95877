#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakevd/optim.hpp"
#include "peakevd/starts.hpp"
#include "peakevd/types.hpp"

// Maximum likelihood estimation of the peak model.
//
// Parameter vectors (likelihood parameterization):
//   gumbel    w = (w0, w1, w2) = (1/A, theta0/A, B/A),        w0 > 0, w1 >= 0
//   fgumbel   adds w3 = gamma, |gamma| <= gamma_th
//   frechet   adds w3 = gamma >= gamma_th, plus the data-dependent feasible
//             set 1 + w3*z_i > 0 for every training record
//   rweibull  w3 = gamma <= -gamma_th, same feasible-set constraint
// with the standardized residual z_i = w0*P_i/sqrt(E_i) - w1*sqrt(E_i) - w2.
namespace peakevd::mle {

inline double z_value(double energy, double peak, const std::vector<double>& w) {
  const double s = std::sqrt(energy);
  return w[0] * peak / s - w[1] * s - w[2];
}

inline void check_record(double energy, const std::vector<double>& w) {
  if (!(energy > 0.0)) throw std::invalid_argument("log-likelihood: energy must be > 0");
  if (!(w[0] > 0.0)) throw std::invalid_argument("log-likelihood: w0 must be > 0");
}

// Gumbel log-density of one record: ln w0 - ln(E)/2 - z - exp(-z).
inline double loglik_gumbel(const CustomerRecord& r, const std::vector<double>& w) {
  check_record(r.energy, w);
  const double z = z_value(r.energy, r.peak, w);
  return std::log(w[0]) - 0.5 * std::log(r.energy) - z - std::exp(-z);
}

// Exact Frechet / reverse-Weibull log-density:
// ln w0 - ln(E)/2 - (1+w3*z)^(-1/w3) - (1+1/w3)*ln(1+w3*z).
inline double loglik_fw(const CustomerRecord& r, const std::vector<double>& w) {
  check_record(r.energy, w);
  const double w3 = w.at(3);
  if (w3 == 0.0) throw std::invalid_argument("loglik_fw: w3 must be nonzero");
  const double z = z_value(r.energy, r.peak, w);
  const double t = 1.0 + w3 * z;
  if (t <= 0.0)
    throw std::domain_error("record '" + r.customer_id +
                            "' infeasible under fitted tail model (1 + gamma*z = " +
                            std::to_string(t) + " <= 0)");
  const double lt = std::log(t);
  return std::log(w[0]) - 0.5 * std::log(r.energy) - std::exp(-lt / w3) -
         (1.0 + 1.0 / w3) * lt;
}

// Numerically safe variant: 1+w3*z clamped from below at eps_th. Total by
// construction; used only inside optimization, never for reported values.
inline double loglik_fw_safe(const CustomerRecord& r, const std::vector<double>& w,
                             double eps_th = 1e-20) {
  check_record(r.energy, w);
  const double w3 = w.at(3);
  if (w3 == 0.0) throw std::invalid_argument("loglik_fw_safe: w3 must be nonzero");
  const double z = z_value(r.energy, r.peak, w);
  const double t = std::max(1.0 + w3 * z, eps_th);
  const double lt = std::log(t);
  return std::log(w[0]) - 0.5 * std::log(r.energy) - std::exp(-lt / w3) -
         (1.0 + 1.0 / w3) * lt;
}

// Fuzzy-Gumbel log-density: the degree-2 polynomial in w3 around the Gumbel
// log-density,
//   l = l_gumbel - w3*(-z^2/2 + z^2*e^-z/2 + z)
//              - w3^2*(z^4*e^-z/8 + z^3/3 - z^3*e^-z/3 - z^2/2).
inline double loglik_fgumbel(const CustomerRecord& r, const std::vector<double>& w,
                             double gamma_th = 1e-2) {
  check_record(r.energy, w);
  const double w3 = w.at(3);
  if (std::fabs(w3) > gamma_th)
    throw std::invalid_argument("loglik_fgumbel requires |gamma| <= gamma_th");
  const double z = z_value(r.energy, r.peak, w);
  const double ez = std::exp(-z);
  const double z2 = z * z, z3 = z2 * z, z4 = z2 * z2;
  const double c1 = -z2 / 2.0 + z2 * ez / 2.0 + z;
  const double c2 = z4 * ez / 8.0 + z3 / 3.0 - z3 * ez / 3.0 - z2 / 2.0;
  return std::log(w[0]) - 0.5 * std::log(r.energy) - z - ez - w3 * c1 - w3 * w3 * c2;
}

inline std::size_t param_dim(Formulation f) {
  switch (f) {
    case Formulation::Gumbel: return 3;
    case Formulation::FuzzyGumbel:
    case Formulation::Frechet:
    case Formulation::ReverseWeibull: return 4;
    case Formulation::C4:
      throw std::invalid_argument("c4 has no likelihood formulation");
  }
  throw std::logic_error("unreachable");
}

inline double loglik(Formulation f, const CustomerRecord& r, const std::vector<double>& w,
                     double gamma_th = 1e-2) {
  switch (f) {
    case Formulation::Gumbel: return loglik_gumbel(r, w);
    case Formulation::FuzzyGumbel: return loglik_fgumbel(r, w, gamma_th);
    case Formulation::Frechet:
    case Formulation::ReverseWeibull: return loglik_fw(r, w);
    case Formulation::C4:
      throw std::invalid_argument("c4 has no likelihood formulation");
  }
  throw std::logic_error("unreachable");
}

// Average negative log-likelihood (exact formulas; clamping is
// optimizer-internal only). Throws, naming the record, if any record is
// infeasible under an exact tail formulation.
inline double anll(Formulation f, const std::vector<double>& w,
                   const std::vector<CustomerRecord>& records, double gamma_th = 1e-2) {
  if (records.empty()) throw std::invalid_argument("anll: no records");
  double total = 0.0;
  for (const auto& r : records) total -= loglik(f, r, w, gamma_th);
  return total / static_cast<double>(records.size());
}

inline double total_nll(Formulation f, const std::vector<double>& w,
                        const std::vector<CustomerRecord>& records,
                        double gamma_th = 1e-2) {
  if (records.empty()) throw std::invalid_argument("total_nll: no records");
  double total = 0.0;
  for (const auto& r : records) total -= loglik(f, r, w, gamma_th);
  return total;
}

// ANLL that reports infeasibility instead of throwing: returns +inf and
// fills `infeasible_ids` when records fall outside the fitted support.
inline double anll_or_inf(Formulation f, const std::vector<double>& w,
                          const std::vector<CustomerRecord>& records,
                          std::vector<std::string>* infeasible_ids,
                          double gamma_th = 1e-2) {
  if (records.empty()) throw std::invalid_argument("anll: no records");
  double total = 0.0;
  bool bad = false;
  for (const auto& r : records) {
    try {
      total -= loglik(f, r, w, gamma_th);
    } catch (const std::domain_error&) {
      bad = true;
      if (infeasible_ids) infeasible_ids->push_back(r.customer_id);
    }
  }
  if (bad) return std::numeric_limits<double>::infinity();
  return total / static_cast<double>(records.size());
}

inline CanonicalParams from_mle_w(Formulation f, const std::vector<double>& w) {
  if (!(w.at(0) > 0.0))
    throw std::invalid_argument("from_mle_w: w0 must be > 0 for the conversion");
  CanonicalParams p;
  p.scale_A = 1.0 / w[0];
  p.theta0 = w[1] / w[0];
  p.loc_B = w[2] / w[0];
  p.gamma = (f == Formulation::Gumbel) ? 0.0 : w.at(3);
  return p;
}

inline std::vector<double> to_mle_w(Formulation f, const CanonicalParams& p) {
  if (!(p.scale_A > 0.0))
    throw std::invalid_argument("to_mle_w: scale_A must be > 0");
  std::vector<double> w = {1.0 / p.scale_A, p.theta0 / p.scale_A, p.loc_B / p.scale_A};
  if (f != Formulation::Gumbel) w.push_back(p.gamma);
  return w;
}

inline optim::Bounds mle_bounds(Formulation f, double gamma_th = 1e-2) {
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
      b.lower = {0.0, 0.0, -inf, -inf};
      b.upper = {inf, inf, inf, -gamma_th};
      return b;
    case Formulation::C4:
      throw std::invalid_argument("c4 has no likelihood formulation");
  }
  throw std::logic_error("unreachable");
}

struct MleFit {
  Formulation formulation = Formulation::Gumbel;
  std::vector<double> w;
  CanonicalParams params;
  double train_anll = 0.0;
  double total_train_nll = 0.0;
  // min_i(1 + gamma*z_i) over the training records; absent for formulations
  // without the support constraint.
  std::optional<double> feasibility_margin;
  optim::OptimResult diag;
};

namespace detail {

inline bool has_support_constraint(Formulation f) {
  return f == Formulation::Frechet || f == Formulation::ReverseWeibull;
}

inline double support_margin(const std::vector<double>& w,
                             const std::vector<CustomerRecord>& records) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : records)
    m = std::min(m, 1.0 + w[3] * z_value(r.energy, r.peak, w));
  return m;
}

// Mean clamped negative log-likelihood; total and fast.
class NllObjective {
 public:
  NllObjective(Formulation f, const std::vector<CustomerRecord>& records,
               double eps_th)
      : f_(f), eps_th_(eps_th) {
    s_.reserve(records.size());
    p_.reserve(records.size());
    for (const auto& r : records) {
      s_.push_back(std::sqrt(r.energy));
      p_.push_back(r.peak);
      log_e_half_ += 0.5 * std::log(r.energy);
    }
  }

  double operator()(const std::vector<double>& w) const {
    const std::size_t n = s_.size();
    if (!(w[0] > 0.0)) return std::numeric_limits<double>::infinity();
    const double lw0 = std::log(w[0]);
    double sum = 0.0;
    switch (f_) {
      case Formulation::Gumbel:
        for (std::size_t i = 0; i < n; ++i) {
          const double z = w[0] * p_[i] / s_[i] - w[1] * s_[i] - w[2];
          sum += z + std::exp(-z);
        }
        break;
      case Formulation::FuzzyGumbel: {
        const double w3 = w[3];
        for (std::size_t i = 0; i < n; ++i) {
          const double z = w[0] * p_[i] / s_[i] - w[1] * s_[i] - w[2];
          const double ez = std::exp(-z);
          const double z2 = z * z, z3 = z2 * z, z4 = z2 * z2;
          const double c1 = -z2 / 2.0 + z2 * ez / 2.0 + z;
          const double c2 = z4 * ez / 8.0 + z3 / 3.0 - z3 * ez / 3.0 - z2 / 2.0;
          sum += z + ez + w3 * c1 + w3 * w3 * c2;
        }
        break;
      }
      default: {  // frechet / rweibull, clamped
        const double w3 = w[3];
        for (std::size_t i = 0; i < n; ++i) {
          const double z = w[0] * p_[i] / s_[i] - w[1] * s_[i] - w[2];
          const double t = std::max(1.0 + w3 * z, eps_th_);
          const double lt = std::log(t);
          sum += std::exp(-lt / w3) + (1.0 + 1.0 / w3) * lt;
        }
        break;
      }
    }
    const double total = sum + log_e_half_ - static_cast<double>(n) * lw0;
    if (std::isnan(total)) return std::numeric_limits<double>::infinity();
    return total / static_cast<double>(n);
  }

 private:
  Formulation f_;
  double eps_th_;
  double log_e_half_ = 0.0;
  std::vector<double> s_, p_;
};

// Shrink |gamma| geometrically until the start satisfies the support
// constraint, stopping at the gamma_th boundary.
inline bool shrink_to_support(std::vector<double>& w,
                              const std::vector<CustomerRecord>& records,
                              double gamma_th) {
  for (int step = 0; step < 60; ++step) {
    if (support_margin(w, records) > 0.0) return true;
    if (std::fabs(w[3]) <= gamma_th) return false;  // at the boundary already
    const double next = w[3] * 0.5;
    w[3] = w[3] > 0.0 ? std::max(next, gamma_th) : std::min(next, -gamma_th);
  }
  return support_margin(w, records) > 0.0;
}

}  // namespace detail

// Maximum-likelihood fit. The optimizer minimizes the clamped mean NLL; the
// reported train ANLL / total NLL use the exact formulas at the optimum.
inline MleFit fit_mle(Formulation f, const std::vector<CustomerRecord>& records,
                      std::uint64_t seed, double gamma_th = 1e-2, double eps_th = 1e-20,
                      const optim::OptimConfig& cfg = {}) {
  if (f == Formulation::C4)
    throw std::invalid_argument("c4 has no likelihood formulation");
  const std::size_t dim = param_dim(f);
  if (records.size() < dim + 1)
    throw std::invalid_argument("fit requires at least " + std::to_string(dim + 1) +
                                " records, got " + std::to_string(records.size()));
  for (const auto& r : records) {
    if (!(r.energy > 0.0))
      throw std::invalid_argument("fit: record '" + r.customer_id +
                                  "' has non-positive energy");
    if (!std::isfinite(r.peak))
      throw std::invalid_argument("fit: record '" + r.customer_id +
                                  "' has non-finite peak");
  }

  CanonicalParams p0 = starts::moment_start(records);
  switch (f) {
    case Formulation::FuzzyGumbel: p0.gamma = 0.0; break;
    case Formulation::Frechet: p0.gamma = 0.1; break;
    case Formulation::ReverseWeibull: p0.gamma = -0.1; break;
    default: break;
  }
  const optim::Bounds bounds = mle_bounds(f, gamma_th);
  std::vector<double> base = to_mle_w(f, p0);
  bounds.project(base);
  if (detail::has_support_constraint(f) &&
      !detail::shrink_to_support(base, records, gamma_th))
    throw std::invalid_argument("fit: no feasible start found for the tail model");

  auto start_list = starts::perturbed_starts(base, bounds, seed);
  if (f != Formulation::Gumbel) {
    MleFit g = fit_mle(Formulation::Gumbel, records, seed, gamma_th, eps_th, cfg);
    CanonicalParams warm = g.params;
    warm.gamma = f == Formulation::FuzzyGumbel ? 0.0
                 : f == Formulation::Frechet   ? gamma_th
                                               : -gamma_th;
    std::vector<double> w_warm = to_mle_w(f, warm);
    bounds.project(w_warm);
    if (!detail::has_support_constraint(f) ||
        detail::shrink_to_support(w_warm, records, gamma_th))
      start_list.push_back(std::move(w_warm));
  }
  if (detail::has_support_constraint(f)) {
    // Drop perturbed starts that violate the support constraint; the base
    // start was repaired above, so at least one survives.
    std::vector<std::vector<double>> kept;
    for (auto& s : start_list)
      if (detail::support_margin(s, records) > 0.0) kept.push_back(std::move(s));
    start_list = std::move(kept);
    if (start_list.empty())
      throw std::invalid_argument("fit: no feasible start found for the tail model");
  }

  detail::NllObjective obj(f, records, eps_th);
  optim::OptimResult best = optim::multistart_minimize(obj, start_list, bounds, seed, cfg);

  MleFit fit;
  fit.formulation = f;
  fit.w = best.x;
  fit.params = from_mle_w(f, best.x);
  if (detail::has_support_constraint(f)) {
    const double margin = detail::support_margin(best.x, records);
    if (!(margin > 0.0))
      throw std::runtime_error(
          "fit: optimum violates the support constraint (margin " +
          std::to_string(margin) + "); data outside this tail model");
    fit.feasibility_margin = margin;
  }
  fit.train_anll = anll(f, best.x, records, gamma_th);
  fit.total_train_nll = total_nll(f, best.x, records, gamma_th);
  fit.diag = std::move(best);
  return fit;
}

}  // namespace peakevd::mle
