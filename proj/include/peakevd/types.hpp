#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace peakevd {

// One customer's interval meter readings (kW per interval).
struct LoadProfile {
  std::string customer_id;
  int interval_minutes = 15;  // provenance only; energy treats the interval as 1
  std::vector<double> readings;
};

// The reduced observation every fit consumes.
struct CustomerRecord {
  std::string customer_id;
  double energy = 0.0;  // kW*interval, interval length normalized to 1
  double peak = 0.0;    // kW
};

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_incomplete = 0;
  std::size_t dropped_negative = 0;
  std::size_t dropped_leading_zero = 0;
  std::vector<std::pair<std::string, std::string>> dropped_ids;  // (id, reason)
};

enum class Formulation { C4, Gumbel, FuzzyGumbel, Frechet, ReverseWeibull };
enum class Method { MQR, MLE };

inline const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::C4: return "c4";
    case Formulation::Gumbel: return "gumbel";
    case Formulation::FuzzyGumbel: return "fgumbel";
    case Formulation::Frechet: return "frechet";
    case Formulation::ReverseWeibull: return "rweibull";
  }
  throw std::logic_error("unreachable formulation tag");
}

inline const char* to_string(Method m) {
  return m == Method::MQR ? "mqr" : "mle";
}

inline Formulation formulation_from_string(const std::string& s) {
  if (s == "c4") return Formulation::C4;
  if (s == "gumbel") return Formulation::Gumbel;
  if (s == "fgumbel") return Formulation::FuzzyGumbel;
  if (s == "frechet") return Formulation::Frechet;
  if (s == "rweibull") return Formulation::ReverseWeibull;
  throw std::invalid_argument("unknown formulation '" + s +
                              "' (expected c4|gumbel|fgumbel|frechet|rweibull)");
}

inline Method method_from_string(const std::string& s) {
  if (s == "mqr") return Method::MQR;
  if (s == "mle") return Method::MLE;
  throw std::invalid_argument("unknown method '" + s + "' (expected mqr|mle)");
}

// Internal home of every parametric formulation. The fitted peak at quantile
// tau is theta0*E + (A*g_gamma(tau) + B)*sqrt(E), where g_gamma is the
// standardized quantile transform selected by gamma (see evd.hpp).
struct CanonicalParams {
  double theta0 = 0.0;   // linear-in-energy coefficient (kW per kW*interval)
  double scale_A = 1.0;  // scale of the sqrt(E) fluctuation term
  double loc_B = 0.0;    // location of the sqrt(E) fluctuation term
  double gamma = 0.0;    // extreme value index (0: Gumbel; >0: heavy tail; <0: bounded tail)
};

// Ordered distinct quantile levels in (0,1).
struct QuantileGrid {
  std::vector<double> taus;

  static QuantileGrid make(double lo, double step, double hi) {
    if (!(step > 0) || !(lo > 0) || !(hi < 1) || !(lo <= hi))
      throw std::invalid_argument("quantile grid requires 0 < lo <= hi < 1 and step > 0");
    QuantileGrid g;
    // Integer stepping avoids drift; round() tolerates lo/step inexactness.
    auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    g.taus.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g.taus.push_back(lo + static_cast<double>(i) * step);
    if (g.taus.back() > hi + 1e-12) g.taus.pop_back();
    return g;
  }

  // The default working grid: 81 levels, 0.10 through 0.90.
  static QuantileGrid standard() { return make(0.10, 0.01, 0.90); }

  std::size_t size() const { return taus.size(); }
};

}  // namespace peakevd
