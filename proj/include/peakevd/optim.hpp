#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

// Derivative-free box/predicate-constrained minimization (Nelder-Mead).
// Deterministic: fixed coefficients, lexicographic tie-breaking, no RNG.
namespace peakevd::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Bounds {
  std::vector<double> lower;  // empty = unbounded; -inf entries allowed
  std::vector<double> upper;
  // Optional extra feasibility predicate (e.g. data-dependent support
  // constraints). Trial points failing it are scored +inf, never evaluated.
  std::function<bool(const std::vector<double>&)> feasible;

  bool in_box(const std::vector<double>& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!lower.empty() && x[j] < lower[j]) return false;
      if (!upper.empty() && x[j] > upper[j]) return false;
    }
    return true;
  }

  bool ok(const std::vector<double>& x) const {
    return in_box(x) && (!feasible || feasible(x));
  }

  void project(std::vector<double>& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!lower.empty()) x[j] = std::max(x[j], lower[j]);
      if (!upper.empty()) x[j] = std::min(x[j], upper[j]);
    }
  }
};

struct OptimConfig {
  std::size_t max_evals = 50000;
  double tol_f = 1e-10;  // stop when simplex f-spread < tol_f*(1+|f_best|)
  double tol_x = 1e-9;   // ... and vertex spread < tol_x
  double init_step = 0.05;
};

struct OptimResult {
  std::vector<double> x;
  double fval = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  bool converged = false;
  int restarts = 0;
};

namespace detail {

inline bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Vertex {
  std::vector<double> x;
  double f;
};

inline bool vertex_less(const Vertex& a, const Vertex& b) {
  if (a.f != b.f) return a.f < b.f;
  return lex_less(a.x, b.x);
}

}  // namespace detail

// The seed parameter is accepted for interface symmetry with stochastic
// methods; the simplex method itself is deterministic and ignores it.
inline OptimResult minimize(const Objective& f, const std::vector<double>& start,
                            const Bounds& bounds, std::uint64_t /*seed*/ = 0,
                            const OptimConfig& cfg = {}) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("minimize: empty start vector");
  if (!bounds.ok(start)) throw std::invalid_argument("minimize: infeasible start");

  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) -> double {
    ++evals;
    if (!bounds.ok(x)) return std::numeric_limits<double>::infinity();
    return f(x);
  };

  const double f0 = eval(start);
  if (!std::isfinite(f0))
    throw std::invalid_argument("minimize: objective not finite at start");

  bool any_converged = false;

  // One simplex descent from (s0, fs0) within the shared eval budget.
  auto run_from = [&](const std::vector<double>& s0, double fs0) -> detail::Vertex {
    // Initial simplex: step along each axis, flipped if it leaves the box.
    std::vector<detail::Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({s0, fs0});
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> x = s0;
      double step = cfg.init_step * std::max(std::fabs(s0[j]), 1.0);
      if (!bounds.upper.empty() && x[j] + step > bounds.upper[j]) step = -step;
      x[j] += step;
      bounds.project(x);
      simplex.push_back({x, eval(x)});
    }

    const double alpha = 1.0, beta = 2.0, gamma_c = 0.5, sigma = 0.5;

    while (evals < cfg.max_evals) {
      std::sort(simplex.begin(), simplex.end(), detail::vertex_less);
      const double fbest = simplex.front().f;
      const double fworst = simplex.back().f;

      double xspread = 0.0;
      for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          xspread = std::max(xspread, std::fabs(simplex[i].x[j] - simplex[0].x[j]));
      if (std::isfinite(fworst) &&
          fworst - fbest < cfg.tol_f * (1.0 + std::fabs(fbest)) &&
          xspread < cfg.tol_x) {
        any_converged = true;
        break;
      }

      // Centroid of all but the worst vertex.
      std::vector<double> c(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          c[j] += simplex[i].x[j] / static_cast<double>(n);

      auto blend = [&](double t) {  // c + t*(c - worst), projected into the box
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = c[j] + t * (c[j] - simplex[n].x[j]);
        bounds.project(x);
        return x;
      };

      std::vector<double> xr = blend(alpha);
      const double fr = eval(xr);

      if (fr < simplex[0].f) {
        std::vector<double> xe = blend(alpha * beta);
        const double fe = eval(xe);
        simplex[n] = fe < fr ? detail::Vertex{std::move(xe), fe}
                             : detail::Vertex{std::move(xr), fr};
      } else if (fr < simplex[n - 1].f) {
        simplex[n] = {std::move(xr), fr};
      } else {
        // Contract: outside toward xr if it improved on the worst, else inside.
        const bool outside = fr < simplex[n].f;
        std::vector<double> xc = blend(outside ? alpha * gamma_c : -gamma_c);
        const double fc = eval(xc);
        if (fc < std::min(fr, simplex[n].f)) {
          simplex[n] = {std::move(xc), fc};
        } else {
          for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
              simplex[i].x[j] =
                  simplex[0].x[j] + sigma * (simplex[i].x[j] - simplex[0].x[j]);
            bounds.project(simplex[i].x);
            simplex[i].f = eval(simplex[i].x);
            if (evals >= cfg.max_evals) break;
          }
        }
      }
    }

    std::sort(simplex.begin(), simplex.end(), detail::vertex_less);
    return simplex.front();
  };

  detail::Vertex best = run_from(start, f0);
  // A simplex can collapse into a subspace and stop early in an
  // ill-conditioned valley. Re-seed a fresh simplex at the claimed optimum
  // until a restart no longer improves on it.
  constexpr int kMaxPolish = 5;
  for (int round = 0; round < kMaxPolish && any_converged && evals < cfg.max_evals;
       ++round) {
    const double prev = best.f;
    detail::Vertex next = run_from(best.x, best.f);
    if (detail::vertex_less(next, best)) best = std::move(next);
    if (!(best.f < prev - cfg.tol_f * (1.0 + std::fabs(prev)))) break;
  }

  OptimResult res;
  // Guard against pathological objectives: never return worse than the start.
  if (best.f <= f0) {
    res.x = best.x;
    res.fval = best.f;
  } else {
    res.x = start;
    res.fval = f0;
  }
  res.evals = evals;
  res.converged = any_converged;
  res.restarts = 0;
  return res;
}

// Best of independent minimize runs over the given starts. Infeasible or
// non-finite starts are skipped; it is an error if none survive.
inline OptimResult multistart_minimize(const Objective& f,
                                       const std::vector<std::vector<double>>& starts,
                                       const Bounds& bounds, std::uint64_t seed = 0,
                                       const OptimConfig& cfg = {}) {
  if (starts.empty()) throw std::invalid_argument("multistart_minimize: no starts");
  OptimResult best;
  bool any = false;
  std::size_t total_evals = 0;
  int used = 0;
  for (const auto& s : starts) {
    if (!bounds.ok(s)) continue;
    OptimResult r;
    try {
      r = minimize(f, s, bounds, seed, cfg);
    } catch (const std::invalid_argument&) {
      continue;  // non-finite objective at this start
    }
    ++used;
    total_evals += r.evals;
    if (!any || r.fval < best.fval ||
        (r.fval == best.fval && detail::lex_less(r.x, best.x))) {
      best = std::move(r);
      any = true;
    }
  }
  if (!any)
    throw std::invalid_argument("multistart_minimize: all starts infeasible");
  best.evals = total_evals;
  best.restarts = used;
  return best;
}

}  // namespace peakevd::optim
