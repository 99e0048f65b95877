#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "peakevd/optim.hpp"
#include "peakevd/rng.hpp"
#include "peakevd/types.hpp"

// Deterministic fit initialization shared by the quantile-regression and
// maximum-likelihood paths.
namespace peakevd::starts {

inline constexpr double kEulerMascheroni = 0.5772156649015329;

// Moment-based starting point: least squares of peak on (E, sqrt(E)) gives
// theta0 and a location guess; the scaled residuals s_i = resid_i/sqrt(E_i)
// are treated as Gumbel(B, A) draws, so A = std(s)*sqrt(6)/pi and
// B = location - EulerMascheroni*A.
inline CanonicalParams moment_start(const std::vector<CustomerRecord>& recs) {
  if (recs.empty()) throw std::invalid_argument("moment_start: no records");
  // Normal equations for P ~ a*E + b*sqrt(E).
  double see = 0, ses = 0, sss = 0, sep = 0, ssp = 0;
  for (const auto& r : recs) {
    if (!(r.energy > 0.0))
      throw std::invalid_argument("moment_start: record '" + r.customer_id +
                                  "' has non-positive energy");
    const double e = r.energy, s = std::sqrt(r.energy);
    see += e * e;
    ses += e * s;
    sss += e;  // s*s
    sep += e * r.peak;
    ssp += s * r.peak;
  }
  const double det = see * sss - ses * ses;
  double a, b;
  if (std::fabs(det) > 1e-300 * std::max(1.0, see * sss)) {
    a = (sep * sss - ses * ssp) / det;
    b = (see * ssp - ses * sep) / det;
  } else {
    // Degenerate design (e.g. all energies equal): fall back to the mean ratio.
    a = 0.0;
    b = ssp / sss;
  }
  double var = 0.0;
  for (const auto& r : recs) {
    const double s = std::sqrt(r.energy);
    const double resid = (r.peak - a * r.energy - b * s) / s;
    var += resid * resid;
  }
  var /= static_cast<double>(recs.size());
  CanonicalParams p;
  p.scale_A = std::max(std::sqrt(var) * std::sqrt(6.0) / 3.14159265358979323846, 1e-8);
  p.theta0 = std::max(a, 0.0);
  p.loc_B = b - kEulerMascheroni * p.scale_A;
  p.gamma = 0.0;
  return p;
}

// The base start plus `count` seeded perturbations, all projected into the
// bounds: +-20% multiplicative on coordinates away from zero, +-0.2 additive
// on coordinates at zero (e.g. a gamma started at 0).
inline std::vector<std::vector<double>> perturbed_starts(
    const std::vector<double>& base, const optim::Bounds& bounds, std::uint64_t seed,
    std::size_t count = 7) {
  std::vector<std::vector<double>> out;
  out.reserve(count + 1);
  out.push_back(base);
  Rng rng(mix_seed(seed, 0x5f72b1));
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> x = base;
    for (double& v : x) {
      const double u = rng.uniform(-1.0, 1.0);
      if (std::fabs(v) > 1e-12)
        v *= 1.0 + 0.2 * u;
      else
        v += 0.2 * u;
    }
    bounds.project(x);
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace peakevd::starts
