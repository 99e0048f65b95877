#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "peakevd/evd.hpp"
#include "peakevd/inference.hpp"
#include "peakevd/mle.hpp"
#include "peakevd/mqr.hpp"
#include "peakevd/profiles.hpp"
#include "peakevd/rng.hpp"
#include "peakevd/types.hpp"

// Synthetic data generation, k-fold cross-validation, and curve exports.
namespace peakevd::experiments {

// ---------------------------------------------------------------------------
// Synthetic generation. Each customer with energy E gets K i.i.d. base
// variates F_k; the candidate loads are X_k = theta0*E + theta1*sqrt(E)*F_k
// and the peak is their maximum.
// ---------------------------------------------------------------------------

enum class BaseDist { Gumbel, Exponential, Pareto, Uniform };

inline const char* to_string(BaseDist b) {
  switch (b) {
    case BaseDist::Gumbel: return "gumbel";
    case BaseDist::Exponential: return "exponential";
    case BaseDist::Pareto: return "pareto";
    case BaseDist::Uniform: return "uniform";
  }
  throw std::logic_error("unreachable base distribution tag");
}

inline BaseDist base_dist_from_string(const std::string& s) {
  if (s == "gumbel") return BaseDist::Gumbel;
  if (s == "exponential") return BaseDist::Exponential;
  if (s == "pareto") return BaseDist::Pareto;
  if (s == "uniform") return BaseDist::Uniform;
  throw std::invalid_argument("unknown base distribution '" + s +
                              "' (expected gumbel|exponential|pareto|uniform)");
}

struct SynthConfig {
  double theta0 = 0.05;
  double theta1 = 1.0;
  std::size_t K = 50;  // peak-candidate slots per customer
  BaseDist base = BaseDist::Exponential;
  double pareto_shape = 2.0;  // tail index 1/shape when base = pareto
  std::vector<double> energies;
  std::uint64_t seed = 0;
  std::size_t T = 0;  // profiles mode: readings per profile (T >= K)
};

namespace detail {

inline void check_config(const SynthConfig& c) {
  if (!(c.theta0 >= 0.0) || !(c.theta1 > 0.0))
    throw std::invalid_argument("synth: requires theta0 >= 0 and theta1 > 0");
  if (c.K == 0) throw std::invalid_argument("synth: K must be >= 1");
  if (c.base == BaseDist::Pareto && !(c.pareto_shape > 0.0))
    throw std::invalid_argument("synth: pareto shape must be > 0");
  if (c.energies.empty()) throw std::invalid_argument("synth: no energies given");
  for (double e : c.energies)
    if (!(e > 0.0)) throw std::invalid_argument("synth: energies must be > 0");
}

inline double draw_base(BaseDist base, double pareto_shape, Rng& rng) {
  const double u = rng.uniform01();
  switch (base) {
    case BaseDist::Gumbel: return -std::log(-std::log(u));
    case BaseDist::Exponential: return -std::log1p(-u);
    case BaseDist::Pareto:
      // (1-u)^(-1/shape) - 1, shifted so the variate starts at 0.
      return std::expm1(-std::log1p(-u) / pareto_shape);
    case BaseDist::Uniform: return u;
  }
  throw std::logic_error("unreachable");
}

inline std::string synth_id(std::size_t i) {
  std::string n = std::to_string(i + 1);
  return "synth_" + std::string(n.size() < 6 ? 6 - n.size() : 0, '0') + n;
}

}  // namespace detail

inline std::vector<double> log_uniform_energies(std::size_t n, double lo, double hi,
                                                std::uint64_t seed) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("log_uniform_energies: need 0 < lo <= hi");
  Rng rng(mix_seed(seed, 0xe7e59));
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::exp(rng.uniform(std::log(lo), std::log(hi))));
  return out;
}

inline std::vector<CustomerRecord> synth_records(const SynthConfig& c) {
  detail::check_config(c);
  Rng rng(mix_seed(c.seed, 0x5e3d5));
  std::vector<CustomerRecord> out;
  out.reserve(c.energies.size());
  for (std::size_t i = 0; i < c.energies.size(); ++i) {
    const double e = c.energies[i];
    const double s = std::sqrt(e);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.K; ++k) {
      const double x = c.theta0 * e + c.theta1 * s * detail::draw_base(c.base, c.pareto_shape, rng);
      peak = std::max(peak, x);
    }
    out.push_back({detail::synth_id(i), e, peak});
  }
  return out;
}

// One profile: the K slot values at the trailing indices, and a constant
// non-negative baseline on the first T-K points chosen so the readings sum
// to `energy`. With T == K the profile is exactly the slot values.
inline LoadProfile build_profile(const std::string& id,
                                 const std::vector<double>& slot_values, double energy,
                                 std::size_t T) {
  if (slot_values.empty() || T < slot_values.size())
    throw std::invalid_argument("build_profile: requires 1 <= K <= T");
  const std::size_t K = slot_values.size();
  LoadProfile p;
  p.customer_id = id;
  p.readings.reserve(T);
  if (T > K) {
    const double slot_sum = std::accumulate(slot_values.begin(), slot_values.end(), 0.0);
    const double baseline = (energy - slot_sum) / static_cast<double>(T - K);
    if (baseline < 0.0)
      throw std::invalid_argument("build_profile: peak slots alone exceed the target "
                                  "energy (required baseline is negative)");
    p.readings.assign(T - K, baseline);
  }
  p.readings.insert(p.readings.end(), slot_values.begin(), slot_values.end());
  return p;
}

inline std::vector<LoadProfile> synth_profiles(const SynthConfig& c) {
  detail::check_config(c);
  if (c.T < c.K) throw std::invalid_argument("synth: profiles mode requires T >= K");
  Rng rng(mix_seed(c.seed, 0x5e3d5));  // same stream as synth_records
  std::vector<LoadProfile> out;
  out.reserve(c.energies.size());
  std::vector<double> slots(c.K);
  for (std::size_t i = 0; i < c.energies.size(); ++i) {
    const double e = c.energies[i];
    const double s = std::sqrt(e);
    for (std::size_t k = 0; k < c.K; ++k)
      slots[k] = c.theta0 * e + c.theta1 * s * detail::draw_base(c.base, c.pareto_shape, rng);
    out.push_back(build_profile(detail::synth_id(i), slots, e, c.T));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation.
// ---------------------------------------------------------------------------

// Seeded shuffle, then near-equal contiguous chunks (sizes differ by <= 1).
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                         std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (n < k) throw std::invalid_argument("kfold_split: need at least k records");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0xf01d5));
  rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                    idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

struct FoldMetrics {
  std::size_t fold = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double train_metric = 0.0;
  double test_metric = 0.0;  // +inf when test records fall outside the support
  std::optional<double> gamma_hat;
  std::vector<std::string> infeasible_test_ids;
};

// One (formulation, method) row of the cross-validation report, plus the
// full-data refit that the likelihood ratio test and Std(gamma_hat) are
// computed from (those are whole-dataset quantities, not fold quantities).
struct CvCell {
  Formulation formulation = Formulation::Gumbel;
  Method method = Method::MQR;
  std::vector<FoldMetrics> folds;
  double mean_train = 0.0;
  double mean_test = 0.0;
  std::optional<double> mean_gamma;
  double full_train_metric = 0.0;
  std::optional<double> full_gamma;
  std::optional<double> std_gamma;
  std::optional<std::string> std_gamma_error;
  std::optional<inference::LrtResult> lrt;
  std::optional<std::string> error;  // set when any fit in the row failed
};

struct CvReport {
  std::size_t k = 0;
  std::size_t n_records = 0;
  std::uint64_t seed = 0;
  QuantileGrid grid;
  std::vector<CvCell> cells;
};

namespace detail {

inline std::size_t formulation_index(Formulation f) {
  switch (f) {
    case Formulation::C4: return 0;
    case Formulation::Gumbel: return 1;
    case Formulation::FuzzyGumbel: return 2;
    case Formulation::Frechet: return 3;
    case Formulation::ReverseWeibull: return 4;
  }
  throw std::logic_error("unreachable");
}

// Stable per-task stream id: independent of user-supplied ordering and of
// --jobs, so parallel and serial runs produce identical bytes.
inline std::uint64_t task_stream(std::size_t fold, Formulation f, Method m) {
  return (static_cast<std::uint64_t>(fold) * 16 + formulation_index(f)) * 2 +
         (m == Method::MLE ? 1 : 0);
}

struct FitOutcome {
  std::vector<double> w;
  double train_metric = 0.0;
  std::optional<double> gamma_hat;
};

inline FitOutcome fit_one(Formulation f, Method m,
                          const std::vector<CustomerRecord>& train,
                          const QuantileGrid& grid, std::uint64_t seed, double gamma_th,
                          double eps_th) {
  FitOutcome out;
  if (m == Method::MQR) {
    mqr::MqrFit fit = f == Formulation::C4
                          ? mqr::fit_c4(train, grid, seed)
                          : mqr::fit_parametric(f, train, grid, seed, gamma_th);
    out.w = fit.w;
    out.train_metric = fit.train_apl;
    if (fit.params && f != Formulation::Gumbel) out.gamma_hat = fit.params->gamma;
  } else {
    mle::MleFit fit = mle::fit_mle(f, train, seed, gamma_th, eps_th);
    out.w = fit.w;
    out.train_metric = fit.train_anll;
    if (f != Formulation::Gumbel) out.gamma_hat = fit.params.gamma;
  }
  return out;
}

inline double test_metric(Formulation f, Method m, const std::vector<double>& w,
                          const std::vector<CustomerRecord>& test,
                          const QuantileGrid& grid, double gamma_th,
                          std::vector<std::string>* infeasible) {
  if (m == Method::MQR) return mqr::apl(f, w, test, grid, gamma_th);
  return mle::anll_or_inf(f, w, test, infeasible, gamma_th);
}

}  // namespace detail

// Fits every (formulation, method) pair on each of the k training folds,
// evaluates train/test metrics (APL for quantile regression, ANLL for maximum
// likelihood), then refits on the full dataset for the likelihood ratio test
// (frechet vs gumbel, MLE) and the Fisher-based Std(gamma_hat). The c4/MLE
// combination does not exist and is skipped.
inline CvReport run_cv(const std::vector<CustomerRecord>& records,
                       const std::vector<Formulation>& formulations,
                       const std::vector<Method>& methods, std::size_t k,
                       std::uint64_t seed, const QuantileGrid& grid = QuantileGrid::standard(),
                       double gamma_th = 1e-2, double eps_th = 1e-20,
                       unsigned jobs = 1) {
  if (formulations.empty() || methods.empty())
    throw std::invalid_argument("run_cv: need at least one formulation and method");
  const auto folds = kfold_split(records.size(), k, seed);

  CvReport rep;
  rep.k = k;
  rep.n_records = records.size();
  rep.seed = seed;
  rep.grid = grid;
  for (Formulation f : formulations)
    for (Method m : methods) {
      if (f == Formulation::C4 && m == Method::MLE) continue;
      CvCell cell;
      cell.formulation = f;
      cell.method = m;
      cell.folds.resize(k);
      rep.cells.push_back(std::move(cell));
    }

  // Precompute train/test record subsets per fold.
  std::vector<std::vector<CustomerRecord>> train_sets(k), test_sets(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<char> in_test(records.size(), 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    for (std::size_t i = 0; i < records.size(); ++i)
      (in_test[i] ? test_sets[f] : train_sets[f]).push_back(records[i]);
  }

  struct Task {
    std::size_t cell;
    std::size_t fold;
  };
  std::vector<Task> tasks;
  tasks.reserve(rep.cells.size() * k);
  for (std::size_t c = 0; c < rep.cells.size(); ++c)
    for (std::size_t f = 0; f < k; ++f) tasks.push_back({c, f});
  std::vector<std::optional<std::string>> task_errors(tasks.size());

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    CvCell& cell = rep.cells[task.cell];
    FoldMetrics& fm = cell.folds[task.fold];
    fm.fold = task.fold;
    fm.train_count = train_sets[task.fold].size();
    fm.test_count = test_sets[task.fold].size();
    try {
      const std::uint64_t s =
          mix_seed(seed, detail::task_stream(task.fold, cell.formulation, cell.method));
      detail::FitOutcome fit = detail::fit_one(cell.formulation, cell.method,
                                               train_sets[task.fold], grid, s, gamma_th,
                                               eps_th);
      fm.train_metric = fit.train_metric;
      fm.gamma_hat = fit.gamma_hat;
      fm.test_metric = detail::test_metric(cell.formulation, cell.method, fit.w,
                                           test_sets[task.fold], grid, gamma_th,
                                           &fm.infeasible_test_ids);
    } catch (const std::exception& e) {
      task_errors[t] = std::string("fold ") + std::to_string(task.fold) + ": " + e.what();
    }
  };

  const unsigned workers = std::max(1u, jobs);
  if (workers == 1 || tasks.size() <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) break;
        run_task(t);
      }
    };
    std::vector<std::thread> pool;
    const unsigned extra = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size())) - 1;
    pool.reserve(extra);
    for (unsigned i = 0; i < extra; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (task_errors[t] && !rep.cells[tasks[t].cell].error)
      rep.cells[tasks[t].cell].error = task_errors[t];

  // Fold means (equal weights; folds partition the records).
  for (CvCell& cell : rep.cells) {
    if (cell.error) continue;
    double tr = 0.0, te = 0.0, g = 0.0;
    std::size_t ng = 0;
    for (const FoldMetrics& fm : cell.folds) {
      tr += fm.train_metric;
      te += fm.test_metric;
      if (fm.gamma_hat) {
        g += *fm.gamma_hat;
        ++ng;
      }
    }
    cell.mean_train = tr / static_cast<double>(k);
    cell.mean_test = te / static_cast<double>(k);
    if (ng > 0) cell.mean_gamma = g / static_cast<double>(ng);
  }

  // Full-data refits; the LRT needs the full-data gumbel MLE as its null.
  std::optional<mle::MleFit> gumbel_full;
  auto full_seed = [&](Formulation f, Method m) {
    return mix_seed(seed, detail::task_stream(k, f, m));
  };
  for (CvCell& cell : rep.cells) {
    if (cell.error) continue;
    try {
      if (cell.method == Method::MLE) {
        mle::MleFit fit = mle::fit_mle(cell.formulation, records,
                                       full_seed(cell.formulation, Method::MLE), gamma_th,
                                       eps_th);
        cell.full_train_metric = fit.train_anll;
        if (cell.formulation != Formulation::Gumbel) {
          cell.full_gamma = fit.params.gamma;
          try {
            cell.std_gamma = inference::fisher_std_gamma(records, fit, gamma_th).std_gamma;
          } catch (const std::exception& e) {
            cell.std_gamma_error = e.what();
          }
        }
        if (cell.formulation == Formulation::Frechet) {
          if (!gumbel_full)
            gumbel_full = mle::fit_mle(Formulation::Gumbel, records,
                                       full_seed(Formulation::Gumbel, Method::MLE),
                                       gamma_th, eps_th);
          cell.lrt = inference::likelihood_ratio_test_from_fits(*gumbel_full, fit);
        }
      } else {
        detail::FitOutcome fit =
            detail::fit_one(cell.formulation, Method::MQR, records, grid,
                            full_seed(cell.formulation, Method::MQR), gamma_th, eps_th);
        cell.full_train_metric = fit.train_metric;
        cell.full_gamma = fit.gamma_hat;
      }
    } catch (const std::exception& e) {
      cell.error = std::string("full fit: ") + e.what();
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Curve exports.
// ---------------------------------------------------------------------------

inline double predict_from_params(Formulation f, const CanonicalParams& p, double tau,
                                  double energy, double gamma_th = 1e-2) {
  if (f == Formulation::FuzzyGumbel)
    return evd::fgumbel_qf_taylor(tau, energy, p, gamma_th);
  return evd::peak_qf(tau, energy, p);
}

// CSV of (tau, energy, predicted_peak) triples, tau-major.
inline void export_quantile_curves(const mqr::MqrFit& fit,
                                   const std::vector<double>& energies,
                                   const std::vector<double>& taus, std::ostream& out,
                                   double gamma_th = 1e-2) {
  out << "tau,energy,predicted_peak\n";
  for (double tau : taus)
    for (double e : energies)
      out << profiles::detail::format_double(tau) << ','
          << profiles::detail::format_double(e) << ','
          << profiles::detail::format_double(
                 mqr::predict_quantile(fit.formulation, fit.w, tau, e, &fit.grid, gamma_th))
          << '\n';
}

inline void export_quantile_curves(const mle::MleFit& fit,
                                   const std::vector<double>& energies,
                                   const std::vector<double>& taus, std::ostream& out,
                                   double gamma_th = 1e-2) {
  out << "tau,energy,predicted_peak\n";
  for (double tau : taus)
    for (double e : energies)
      out << profiles::detail::format_double(tau) << ','
          << profiles::detail::format_double(e) << ','
          << profiles::detail::format_double(
                 predict_from_params(fit.formulation, fit.params, tau, e, gamma_th))
          << '\n';
}

// A source for the beta-vs-tau comparison plot: either a parametric curve
// (canonical params) or the discrete grid points of a c4 fit.
struct BetaCurveSource {
  std::string label;
  Formulation formulation = Formulation::Gumbel;
  std::optional<CanonicalParams> params;  // parametric curves
  std::vector<double> grid_taus;          // c4 points
  std::vector<double> grid_betas;
};

inline BetaCurveSource beta_source(const mqr::MqrFit& fit, std::string label = {}) {
  BetaCurveSource s;
  s.formulation = fit.formulation;
  s.label = label.empty() ? std::string(to_string(fit.formulation)) + "_mqr" : label;
  if (fit.formulation == Formulation::C4) {
    s.grid_taus = fit.grid.taus;
    s.grid_betas.assign(fit.w.begin() + 1, fit.w.end());
  } else {
    s.params = fit.params;
  }
  return s;
}

inline BetaCurveSource beta_source(const mle::MleFit& fit, std::string label = {}) {
  BetaCurveSource s;
  s.formulation = fit.formulation;
  s.label = label.empty() ? std::string(to_string(fit.formulation)) + "_mle" : label;
  s.params = fit.params;
  return s;
}

// CSV of (source, tau, beta): parametric sources evaluated over `taus`,
// c4 sources at their own grid levels.
inline void export_beta_curves(const std::vector<BetaCurveSource>& sources,
                               const std::vector<double>& taus, std::ostream& out,
                               double gamma_th = 1e-2) {
  out << "source,tau,beta\n";
  for (const auto& s : sources) {
    if (s.params) {
      for (double tau : taus) {
        const double beta = s.formulation == Formulation::FuzzyGumbel
                                ? evd::fgumbel_beta_tau(tau, *s.params, gamma_th)
                                : evd::beta_tau(tau, *s.params);
        out << s.label << ',' << profiles::detail::format_double(tau) << ','
            << profiles::detail::format_double(beta) << '\n';
      }
    } else {
      for (std::size_t i = 0; i < s.grid_taus.size(); ++i)
        out << s.label << ',' << profiles::detail::format_double(s.grid_taus[i]) << ','
            << profiles::detail::format_double(s.grid_betas[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Simulation utilities.
// ---------------------------------------------------------------------------

// Kolmogorov-Smirnov distance between the sample and a reference CDF.
inline double ks_statistic(std::vector<double> xs,
                           const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - F));
    d = std::max(d, std::fabs(static_cast<double>(i) / n - F));
  }
  return d;
}

}  // namespace peakevd::experiments
