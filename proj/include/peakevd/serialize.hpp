#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "peakevd/experiments.hpp"
#include "peakevd/inference.hpp"
#include "peakevd/mle.hpp"
#include "peakevd/mqr.hpp"
#include "peakevd/types.hpp"

// JSON and text rendering of reports. nlohmann::json objects keep keys
// sorted and print doubles with shortest-round-trip formatting, so dumps are
// deterministic. Non-finite values are emitted as null (JSON has no inf);
// infeasible test records are listed explicitly alongside.
namespace peakevd::serialize {

using json = nlohmann::json;

inline json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

template <class T>
inline json opt_or_null(const std::optional<T>& v) {
  if (!v) return nullptr;
  return *v;
}

inline std::string format_scientific3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

inline std::string format_fixed6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline json json_of(const FilterReport& r) {
  json dropped = json::array();
  for (const auto& [id, reason] : r.dropped_ids)
    dropped.push_back({{"customer_id", id}, {"reason", reason}});
  return {{"kept", r.kept},
          {"dropped_incomplete", r.dropped_incomplete},
          {"dropped_negative", r.dropped_negative},
          {"dropped_leading_zero", r.dropped_leading_zero},
          {"dropped_ids", dropped}};
}

inline json json_of(const CanonicalParams& p) {
  return {{"theta0", p.theta0},
          {"scale_A", p.scale_A},
          {"loc_B", p.loc_B},
          {"gamma", p.gamma}};
}

inline json json_of(const optim::OptimResult& r) {
  return {{"objective", finite_or_null(r.fval)},
          {"evaluations", r.evals},
          {"converged", r.converged},
          {"restarts", r.restarts}};
}

inline json json_of(const mqr::MqrFit& f) {
  json j{{"formulation", to_string(f.formulation)},
         {"method", "mqr"},
         {"w", f.w},
         {"train_apl", finite_or_null(f.train_apl)},
         {"grid", f.grid.taus},
         {"optimizer", json_of(f.diag)}};
  j["params"] = f.params ? json_of(*f.params) : json(nullptr);
  return j;
}

inline json json_of(const mle::MleFit& f) {
  return {{"formulation", to_string(f.formulation)},
          {"method", "mle"},
          {"w", f.w},
          {"params", json_of(f.params)},
          {"train_anll", finite_or_null(f.train_anll)},
          {"total_train_nll", finite_or_null(f.total_train_nll)},
          {"feasibility_margin", opt_or_null(f.feasibility_margin)},
          {"optimizer", json_of(f.diag)}};
}

inline json json_of(const inference::LrtResult& r) {
  return {{"ell0", r.ell0},
          {"ell1", r.ell1},
          {"lambda", r.lambda},
          {"p_value", r.p_value},
          {"p_value_str", format_scientific3(r.p_value)}};
}

inline json json_of(const inference::FisherResult& r) {
  return {{"hessian", r.hessian}, {"std_gamma", r.std_gamma}};
}

inline json json_of(const experiments::FoldMetrics& m) {
  return {{"fold", m.fold},
          {"train_count", m.train_count},
          {"test_count", m.test_count},
          {"train_metric", finite_or_null(m.train_metric)},
          {"test_metric", finite_or_null(m.test_metric)},
          {"gamma_hat", opt_or_null(m.gamma_hat)},
          {"infeasible_test_ids", m.infeasible_test_ids}};
}

inline json json_of(const experiments::CvCell& c) {
  json folds = json::array();
  for (const auto& fm : c.folds) folds.push_back(json_of(fm));
  json j{{"formulation", to_string(c.formulation)},
         {"method", to_string(c.method)},
         {"folds", folds},
         {"mean_train", finite_or_null(c.mean_train)},
         {"mean_test", finite_or_null(c.mean_test)},
         {"mean_gamma", opt_or_null(c.mean_gamma)},
         {"full_train_metric", finite_or_null(c.full_train_metric)},
         {"full_gamma", opt_or_null(c.full_gamma)},
         {"std_gamma", opt_or_null(c.std_gamma)},
         {"std_gamma_error", opt_or_null(c.std_gamma_error)},
         {"error", opt_or_null(c.error)}};
  j["lrt"] = c.lrt ? json_of(*c.lrt) : json(nullptr);
  return j;
}

inline json json_of(const experiments::CvReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(json_of(c));
  return {{"k", r.k},
          {"n_records", r.n_records},
          {"seed", r.seed},
          {"grid", r.grid.taus},
          {"cells", cells}};
}

// Aligned text table: per-formulation mean train (Tr) and test (Te) metrics,
// the across-fold mean gamma_hat, the Fisher Std(gamma_hat), and the
// likelihood-ratio p-value where defined.
inline std::string render_cv_table(const experiments::CvReport& r) {
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out;
  out += "cross-validation report (k=" + std::to_string(r.k) +
         ", n=" + std::to_string(r.n_records) + ", seed=" + std::to_string(r.seed) +
         ")\n";
  out += "metric: APL [kW] for mqr rows, ANLL for mle rows\n\n";
  out += pad("formulation", 13) + pad("method", 8) + pad("Tr", 14) + pad("Te", 14) +
         pad("gamma_hat", 13) + pad("std_gamma", 13) + "lrt_p\n";
  for (const auto& c : r.cells) {
    out += pad(to_string(c.formulation), 13);
    out += pad(to_string(c.method), 8);
    if (c.error) {
      out += "error: " + *c.error + "\n";
      continue;
    }
    out += pad(format_fixed6(c.mean_train), 14);
    out += pad(format_fixed6(c.mean_test), 14);
    out += pad(c.mean_gamma ? format_fixed6(*c.mean_gamma) : "-", 13);
    out += pad(c.std_gamma ? format_fixed6(*c.std_gamma) : "-", 13);
    out += c.lrt ? format_scientific3(c.lrt->p_value) : "-";
    out += '\n';
  }
  return out;
}

}  // namespace peakevd::serialize
