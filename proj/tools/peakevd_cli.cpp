// Command-line surface: ingestion, fitting, cross-validation, the
// likelihood ratio test, synthetic data generation, and curve exports.
//
// Exit codes: 0 success, 2 usage/schema errors, 1 other runtime errors.
// Errors are emitted as one-line JSON on stderr. All outputs are
// deterministic for fixed inputs, flags, and seed; --jobs only changes how
// work is scheduled, never the bytes produced.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "peakevd/peakevd.hpp"

namespace fs = std::filesystem;
using namespace peakevd;

namespace {

std::vector<double> parse_triplet(const std::string& s, const char* what) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "' in '" +
                                  s + "'");
    }
  }
  if (parts.size() != 3)
    throw std::invalid_argument(std::string(what) + ": expected lo:step:hi, got '" + s +
                                "'");
  return parts;
}

QuantileGrid parse_grid(const std::string& s) {
  auto p = parse_triplet(s, "--grid");
  return QuantileGrid::make(p[0], p[1], p[2]);
}

// lo:hi:count, log-spaced.
std::vector<double> parse_energies(const std::string& s) {
  auto p = parse_triplet(s, "--energies");
  const double lo = p[0], hi = p[1];
  const auto count = static_cast<std::size_t>(p[2]);
  if (!(lo > 0.0) || !(hi >= lo) || count < 2)
    throw std::invalid_argument("--energies: need 0 < lo <= hi and count >= 2");
  std::vector<double> out;
  out.reserve(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                     static_cast<double>(count - 1)));
  return out;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + name + "'");
  return f;
}

void write_json(const fs::path& dir, const std::string& name, const nlohmann::json& j) {
  auto f = open_out(dir, name);
  f << j.dump(2) << '\n';
  std::cout << "wrote " << name << '\n';
}

// Shared input options for commands that consume customer data.
struct InputOpts {
  std::string input;
  std::string kind = "records";
  std::size_t expected_t = 0;  // 0: most common profile length
  std::size_t leading_window = 672;
};

void add_input_opts(CLI::App* cmd, InputOpts& in) {
  cmd->add_option("--input", in.input, "Input CSV path")->required();
  cmd->add_option("--kind", in.kind, "Input kind: records|profiles")
      ->check(CLI::IsMember({"records", "profiles"}));
  cmd->add_option("--expected-t", in.expected_t,
                  "Profiles: required readings per profile (0 = most common length)");
  cmd->add_option("--leading-window", in.leading_window,
                  "Profiles: leading all-zero exclusion window (points)");
}

std::vector<LoadProfile> load_profiles(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open input file '" + path + "'");
  return profiles::ingest_csv(f);
}

std::size_t infer_expected_t(const std::vector<LoadProfile>& ps) {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& p : ps) ++counts[p.readings.size()];
  std::size_t best_len = 0, best_count = 0;
  for (const auto& [len, cnt] : counts)
    if (cnt > best_count || (cnt == best_count && len > best_len)) {
      best_len = len;
      best_count = cnt;
    }
  return best_len;
}

std::vector<CustomerRecord> load_records(const InputOpts& in) {
  if (in.kind == "records") {
    std::ifstream f(in.input);
    if (!f) throw std::invalid_argument("cannot open input file '" + in.input + "'");
    return profiles::read_records_csv(f);
  }
  auto ps = load_profiles(in.input);
  const std::size_t T = in.expected_t ? in.expected_t : infer_expected_t(ps);
  auto [kept, rep] = profiles::filter_profiles(ps, T, std::min(in.leading_window, T));
  std::vector<CustomerRecord> recs;
  recs.reserve(kept.size());
  for (const auto& p : kept) recs.push_back(profiles::reduce_profile(p));
  return recs;
}

std::vector<Formulation> parse_formulations(const std::vector<std::string>& names) {
  std::vector<Formulation> out;
  if (names.empty()) {
    out = {Formulation::C4, Formulation::Gumbel, Formulation::FuzzyGumbel,
           Formulation::Frechet, Formulation::ReverseWeibull};
    return out;
  }
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(formulation_from_string(n));
  return out;
}

std::vector<Method> parse_methods(const std::string& m) {
  if (m == "mqr") return {Method::MQR};
  if (m == "mle") return {Method::MLE};
  if (m == "both") return {Method::MQR, Method::MLE};
  throw std::invalid_argument("unknown method '" + m + "' (expected mqr|mle|both)");
}

struct FitFlags {
  std::vector<std::string> formulations;
  std::string method = "both";
  std::string grid = "0.10:0.01:0.90";
  std::uint64_t seed = 0;
  double gamma_th = 1e-2;
  double eps_th = 1e-20;
  std::string out;
};

void add_fit_flags(CLI::App* cmd, FitFlags& ff, bool method_both_allowed = true) {
  cmd->add_option("--formulation", ff.formulations,
                  "Formulation (repeatable): c4|gumbel|fgumbel|frechet|rweibull; "
                  "default: all");
  cmd->add_option("--method", ff.method,
                  method_both_allowed ? "Fitting method: mqr|mle|both"
                                      : "Fitting method: mqr|mle");
  cmd->add_option("--grid", ff.grid, "Quantile grid lo:step:hi");
  cmd->add_option("--seed", ff.seed, "Random seed");
  cmd->add_option("--gamma-th", ff.gamma_th, "Tail-index threshold gamma_th");
  cmd->add_option("--eps-th", ff.eps_th, "Likelihood clamp epsilon");
  cmd->add_option("--out", ff.out, "Output directory")->required();
}

int run(int argc, char** argv) {
  CLI::App app{"Peak-load extreme-value model fitting"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file");
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for fold/formulation fits");

  // --- ingest -------------------------------------------------------------
  auto* cmd_ingest = app.add_subcommand("ingest", "Reduce load profiles to records");
  InputOpts ing_in;
  std::string ing_out;
  add_input_opts(cmd_ingest, ing_in);
  cmd_ingest->add_option("--out", ing_out, "Output directory")->required();
  cmd_ingest->callback([&] {
    auto ps = load_profiles(ing_in.input);
    const std::size_t T = ing_in.expected_t ? ing_in.expected_t : infer_expected_t(ps);
    auto [kept, rep] = profiles::filter_profiles(
        ps, T, ing_in.leading_window > T ? T : ing_in.leading_window);
    std::vector<CustomerRecord> recs;
    recs.reserve(kept.size());
    for (const auto& p : kept) recs.push_back(profiles::reduce_profile(p));
    auto f = open_out(ing_out, "records.csv");
    profiles::write_records_csv(f, recs);
    std::cout << "wrote records.csv\n";
    write_json(ing_out, "filter_report.json", serialize::json_of(rep));
  });

  // --- fit ----------------------------------------------------------------
  auto* cmd_fit = app.add_subcommand("fit", "Fit formulations on a dataset");
  InputOpts fit_in;
  FitFlags fit_ff;
  add_input_opts(cmd_fit, fit_in);
  add_fit_flags(cmd_fit, fit_ff);
  cmd_fit->callback([&] {
    const auto records = load_records(fit_in);
    const auto grid = parse_grid(fit_ff.grid);
    for (Formulation f : parse_formulations(fit_ff.formulations)) {
      for (Method m : parse_methods(fit_ff.method)) {
        if (f == Formulation::C4 && m == Method::MLE) continue;
        const std::string name = std::string("fit_") + to_string(f) + "_" +
                                 to_string(m) + ".json";
        if (m == Method::MQR) {
          mqr::MqrFit fit = f == Formulation::C4
                                ? mqr::fit_c4(records, grid, fit_ff.seed)
                                : mqr::fit_parametric(f, records, grid, fit_ff.seed,
                                                      fit_ff.gamma_th);
          write_json(fit_ff.out, name, serialize::json_of(fit));
        } else {
          mle::MleFit fit =
              mle::fit_mle(f, records, fit_ff.seed, fit_ff.gamma_th, fit_ff.eps_th);
          write_json(fit_ff.out, name, serialize::json_of(fit));
        }
      }
    }
  });

  // --- cv -----------------------------------------------------------------
  auto* cmd_cv = app.add_subcommand("cv", "k-fold cross-validation report");
  InputOpts cv_in;
  FitFlags cv_ff;
  std::size_t cv_k = 5;
  add_input_opts(cmd_cv, cv_in);
  add_fit_flags(cmd_cv, cv_ff);
  cmd_cv->add_option("--k", cv_k, "Number of folds");
  cmd_cv->callback([&] {
    const auto records = load_records(cv_in);
    const auto grid = parse_grid(cv_ff.grid);
    const auto rep = experiments::run_cv(records, parse_formulations(cv_ff.formulations),
                                         parse_methods(cv_ff.method), cv_k, cv_ff.seed,
                                         grid, cv_ff.gamma_th, cv_ff.eps_th, jobs);
    write_json(cv_ff.out, "cv_report.json", serialize::json_of(rep));
    auto f = open_out(cv_ff.out, "cv_report.txt");
    f << serialize::render_cv_table(rep);
    std::cout << "wrote cv_report.txt\n";
  });

  // --- lrt ----------------------------------------------------------------
  auto* cmd_lrt = app.add_subcommand(
      "lrt", "Likelihood ratio test (gumbel null vs frechet alternative)");
  InputOpts lrt_in;
  std::string lrt_out;
  std::uint64_t lrt_seed = 0;
  double lrt_gamma_th = 1e-2, lrt_eps_th = 1e-20;
  add_input_opts(cmd_lrt, lrt_in);
  cmd_lrt->add_option("--seed", lrt_seed, "Random seed");
  cmd_lrt->add_option("--gamma-th", lrt_gamma_th, "Tail-index threshold gamma_th");
  cmd_lrt->add_option("--eps-th", lrt_eps_th, "Likelihood clamp epsilon");
  cmd_lrt->add_option("--out", lrt_out, "Output directory")->required();
  cmd_lrt->callback([&] {
    const auto records = load_records(lrt_in);
    const mle::MleFit h0 =
        mle::fit_mle(Formulation::Gumbel, records, lrt_seed, lrt_gamma_th, lrt_eps_th);
    const mle::MleFit h1 =
        mle::fit_mle(Formulation::Frechet, records, lrt_seed, lrt_gamma_th, lrt_eps_th);
    const auto lrt = inference::likelihood_ratio_test_from_fits(h0, h1);
    nlohmann::json j{{"lrt", serialize::json_of(lrt)},
                     {"gumbel_fit", serialize::json_of(h0)},
                     {"frechet_fit", serialize::json_of(h1)}};
    try {
      const auto fisher = inference::fisher_std_gamma(records, h1, lrt_gamma_th);
      j["fisher"] = serialize::json_of(fisher);
      j["fisher_error"] = nullptr;
    } catch (const std::exception& e) {
      j["fisher"] = nullptr;
      j["fisher_error"] = e.what();
    }
    write_json(lrt_out, "lrt.json", j);
    std::cout << "p = " << serialize::format_scientific3(lrt.p_value) << '\n';
  });

  // --- synth --------------------------------------------------------------
  auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic data");
  std::string sy_out, sy_mode = "records", sy_base = "exponential";
  experiments::SynthConfig sy;
  std::size_t sy_n = 500;
  double sy_emin = 1e2, sy_emax = 1e6;
  cmd_synth->add_option("--out", sy_out, "Output directory")->required();
  cmd_synth->add_option("--mode", sy_mode, "records|profiles")
      ->check(CLI::IsMember({"records", "profiles"}));
  cmd_synth->add_option("--base", sy_base,
                        "Base distribution: gumbel|exponential|pareto|uniform");
  cmd_synth->add_option("--pareto-shape", sy.pareto_shape, "Pareto shape (tail 1/shape)");
  cmd_synth->add_option("--n", sy_n, "Number of customers");
  cmd_synth->add_option("--K", sy.K, "Peak-candidate slots per customer");
  cmd_synth->add_option("--theta0", sy.theta0, "Linear energy coefficient");
  cmd_synth->add_option("--theta1", sy.theta1, "sqrt-energy scale coefficient");
  cmd_synth->add_option("--emin", sy_emin, "Energy range low end (log-uniform)");
  cmd_synth->add_option("--emax", sy_emax, "Energy range high end (log-uniform)");
  cmd_synth->add_option("--seed", sy.seed, "Random seed");
  cmd_synth->add_option("--T", sy.T, "Profiles mode: readings per profile");
  cmd_synth->callback([&] {
    sy.base = experiments::base_dist_from_string(sy_base);
    sy.energies = experiments::log_uniform_energies(sy_n, sy_emin, sy_emax, sy.seed);
    if (sy_mode == "records") {
      auto recs = experiments::synth_records(sy);
      auto f = open_out(sy_out, "synth_records.csv");
      profiles::write_records_csv(f, recs);
      std::cout << "wrote synth_records.csv\n";
    } else {
      auto ps = experiments::synth_profiles(sy);
      auto f = open_out(sy_out, "synth_profiles.csv");
      profiles::write_profiles_csv(f, ps);
      std::cout << "wrote synth_profiles.csv\n";
    }
  });

  // --- curves -------------------------------------------------------------
  auto* cmd_curves = app.add_subcommand(
      "curves", "Export predicted quantile curves and beta-vs-tau curves");
  InputOpts cu_in;
  FitFlags cu_ff;
  std::string cu_energies = "1e2:1e6:25";
  std::string cu_taus = "0.01:0.01:0.99";
  add_input_opts(cmd_curves, cu_in);
  add_fit_flags(cmd_curves, cu_ff);
  cmd_curves->add_option("--energies", cu_energies, "Energy grid lo:hi:count (log-spaced)");
  cmd_curves->add_option("--taus", cu_taus, "Quantile levels lo:step:hi for the curves");
  cmd_curves->callback([&] {
    const auto records = load_records(cu_in);
    const auto grid = parse_grid(cu_ff.grid);
    const auto energies = parse_energies(cu_energies);
    const auto tau_grid = parse_grid(cu_taus);
    std::vector<experiments::BetaCurveSource> sources;
    for (Formulation f : parse_formulations(cu_ff.formulations)) {
      for (Method m : parse_methods(cu_ff.method)) {
        if (f == Formulation::C4 && m == Method::MLE) continue;
        const std::string name = std::string("quantile_curves_") + to_string(f) + "_" +
                                 to_string(m) + ".csv";
        if (m == Method::MQR) {
          mqr::MqrFit fit = f == Formulation::C4
                                ? mqr::fit_c4(records, grid, cu_ff.seed)
                                : mqr::fit_parametric(f, records, grid, cu_ff.seed,
                                                      cu_ff.gamma_th);
          auto out = open_out(cu_ff.out, name);
          // c4 defines quantiles only on its grid.
          const auto& taus = f == Formulation::C4 ? grid.taus : tau_grid.taus;
          experiments::export_quantile_curves(fit, energies, taus, out, cu_ff.gamma_th);
          sources.push_back(experiments::beta_source(fit));
        } else {
          mle::MleFit fit =
              mle::fit_mle(f, records, cu_ff.seed, cu_ff.gamma_th, cu_ff.eps_th);
          auto out = open_out(cu_ff.out, name);
          experiments::export_quantile_curves(fit, energies, tau_grid.taus, out,
                                              cu_ff.gamma_th);
          sources.push_back(experiments::beta_source(fit));
        }
        std::cout << "wrote " << name << '\n';
      }
    }
    auto f = open_out(cu_ff.out, "beta_curves.csv");
    experiments::export_beta_curves(sources, tau_grid.taus, f, cu_ff.gamma_th);
    std::cout << "wrote beta_curves.csv\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
}
