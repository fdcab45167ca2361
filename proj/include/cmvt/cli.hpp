#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/minnesota.hpp"
#include "cmvt/serialize.hpp"
#include "cmvt/simulate.hpp"
#include "cmvt/type1.hpp"
#include "cmvt/type2.hpp"
#include "cmvt/version.hpp"

namespace cmvt::cli {

namespace fs = std::filesystem;

enum class Model { kType1, kType1Minnesota, kType2, kType2Minnesota };

inline Model parse_model(const std::string& s) {
  if (s == "type1") return Model::kType1;
  if (s == "type1-minnesota") return Model::kType1Minnesota;
  if (s == "type2") return Model::kType2;
  if (s == "type2-minnesota") return Model::kType2Minnesota;
  throw ParseError("unknown model '" + s + "'");
}

inline std::string to_string(Model m) {
  switch (m) {
    case Model::kType1: return "type1";
    case Model::kType1Minnesota: return "type1-minnesota";
    case Model::kType2: return "type2";
    case Model::kType2Minnesota: return "type2-minnesota";
  }
  return "?";
}

inline bool is_minnesota(Model m) {
  return m == Model::kType1Minnesota || m == Model::kType2Minnesota;
}

/// One run, read from config.json. Relative paths resolve against the
/// directory holding the config file.
struct RunConfig {
  Model model = Model::kType1;
  std::string endogenous;
  std::optional<std::string> exogenous;
  int p = 1;
  io::json init = "default";
  std::optional<VectorXd> phi;  // Minnesota default init
  FitOptions fit;
  std::uint64_t seed = 1;
  std::string output = "out";

  void validate() const {
    if (!(fit.tol > 0.0)) throw ParseError("config: tol must be positive");
    if (fit.max_iters < 0) throw ParseError("config: max_iters must be non-negative");
    if (p < 0) throw ParseError("config: p must be non-negative");
    if (endogenous.empty()) throw ParseError("config: 'endogenous' data path is required");
  }
};

inline Nu0Equation parse_nu0_equation(const std::string& s) {
  if (s == "first-order") return Nu0Equation::kFirstOrder;
  if (s == "unscaled-log") return Nu0Equation::kUnscaledLog;
  throw ParseError("nu0-equation must be 'first-order' or 'unscaled-log'");
}
inline const char* to_string(Nu0Equation e) {
  return e == Nu0Equation::kFirstOrder ? "first-order" : "unscaled-log";
}
inline GammaDelta parse_gamma_delta(const std::string& s) {
  if (s == "consistent") return GammaDelta::kConsistent;
  if (s == "log-weighted") return GammaDelta::kLogWeighted;
  throw ParseError("gamma-delta-variant must be 'consistent' or 'log-weighted'");
}
inline const char* to_string(GammaDelta g) {
  return g == GammaDelta::kConsistent ? "consistent" : "log-weighted";
}
inline GammaDof parse_gamma_dof(const std::string& s) {
  if (s == "per-period") return GammaDof::kPerPeriod;
  if (s == "full-sample") return GammaDof::kFullSample;
  throw ParseError("type2-gamma-dof must be 'per-period' or 'full-sample'");
}
inline const char* to_string(GammaDof g) {
  return g == GammaDof::kPerPeriod ? "per-period" : "full-sample";
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline RunConfig load_config(const std::string& path) {
  const io::json j = io::read_json(path);
  if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
  const fs::path base = fs::path(path).parent_path();
  RunConfig c;
  try {
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    c.endogenous = resolve(base, io::require(j, "endogenous").get<std::string>());
    if (j.contains("exogenous") && !j.at("exogenous").is_null())
      c.exogenous = resolve(base, j.at("exogenous").get<std::string>());
    if (j.contains("p")) c.p = j.at("p").get<int>();
    if (j.contains("init")) {
      c.init = j.at("init");
      if (c.init.is_string() && c.init.get<std::string>() != "default")
        c.init = io::read_json(resolve(base, c.init.get<std::string>()));
    }
    if (j.contains("phi")) c.phi = io::vector_from_json(j.at("phi"), "phi");
    if (j.contains("tol")) c.fit.tol = j.at("tol").get<double>();
    if (j.contains("max_iters")) c.fit.max_iters = j.at("max_iters").get<int>();
    if (j.contains("update-nu0")) c.fit.update_nu0 = j.at("update-nu0").get<bool>();
    if (j.contains("nu0-equation"))
      c.fit.nu0_equation = parse_nu0_equation(j.at("nu0-equation").get<std::string>());
    if (j.contains("gamma-delta-variant"))
      c.fit.gamma_delta = parse_gamma_delta(j.at("gamma-delta-variant").get<std::string>());
    if (j.contains("type2-gamma-dof"))
      c.fit.type2_gamma_dof = parse_gamma_dof(j.at("type2-gamma-dof").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) c.output = resolve(base, j.at("output").get<std::string>());
    else c.output = resolve(base, c.output);
  } catch (const io::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return c;
}

/// Fitted parameters of any of the four models plus the monitored trace.
struct FitOutcome {
  io::json params;
  std::string trace_csv;
  std::size_t iterations = 0;
  double loglik = 0.0;
  bool converged = false;
  StopReason stop = StopReason::kMaxIters;
  std::string failure;
};

template <class Snapshot, class ToJson>
FitOutcome summarize(const FitResult<Snapshot>& r, ToJson&& to_json) {
  FitOutcome o;
  o.params = to_json(r.params);
  o.trace_csv = io::trace_to_csv(r.trace);
  o.iterations = r.trace.iterations.size() - 1;
  o.loglik = r.trace.iterations.back().loglik;
  o.converged = r.trace.converged;
  o.stop = r.trace.stop_reason;
  o.failure = r.trace.failure;
  return o;
}

inline minnesota::MinnesotaHyper hyper_init(const RunConfig& c, const DesignMatrices& design) {
  if (c.init.is_object()) return io::hyper_from_json(c.init);
  VectorXd phi = c.phi.value_or(VectorXd::Ones(design.n()));
  return minnesota::default_init(design, phi, c.p);
}

inline FitOutcome run_fit(const RunConfig& c, const DesignMatrices& design) {
  switch (c.model) {
    case Model::kType1: {
      const Type1Params init = c.init.is_object() ? io::params_from_json<ModelKind::kType1>(c.init)
                                                  : type1::default_init(design);
      return summarize(type1::fit(init, design, c.fit),
                       [](const auto& p) { return io::params_to_json(p); });
    }
    case Model::kType2: {
      const Type2Params init = c.init.is_object() ? io::params_from_json<ModelKind::kType2>(c.init)
                                                  : type2::default_init(design);
      return summarize(type2::fit(init, design, c.fit),
                       [](const auto& p) { return io::params_to_json(p); });
    }
    case Model::kType1Minnesota:
      return summarize(minnesota::fit_type1(hyper_init(c, design), c.p, design, c.fit),
                       [](const auto& h) { return io::hyper_to_json(h); });
    case Model::kType2Minnesota:
      return summarize(type2::fit_minnesota(hyper_init(c, design), c.p, design, c.fit),
                       [](const auto& h) { return io::hyper_to_json(h); });
  }
  throw ParseError("unknown model");
}

inline double eval_loglik(Model model, int p, const io::json& doc, const DesignMatrices& design) {
  switch (model) {
    case Model::kType1:
      return type1::log_marginal_likelihood(io::params_from_json<ModelKind::kType1>(doc), design);
    case Model::kType2:
      return type2::log_likelihood(io::params_from_json<ModelKind::kType2>(doc), design);
    case Model::kType1Minnesota:
      return minnesota::log_likelihood_type1(io::hyper_from_json(doc), p, design);
    case Model::kType2Minnesota:
      return type2::log_likelihood_minnesota(io::hyper_from_json(doc), p, design);
  }
  throw ParseError("unknown model");
}

inline std::string report(const RunConfig& c, const DesignMatrices& design, const FitOutcome& o) {
  std::ostringstream os;
  os << "cmvt fit report\n"
     << "model: " << to_string(c.model) << '\n'
     << "data: n=" << design.n() << " d=" << design.d() << " T=" << design.T() << " p=" << c.p
     << '\n'
     << "variants: update-nu0=" << (c.fit.update_nu0 ? "true" : "false")
     << " nu0-equation=" << to_string(c.fit.nu0_equation)
     << " gamma-delta-variant=" << to_string(c.fit.gamma_delta)
     << " type2-gamma-dof=" << to_string(c.fit.type2_gamma_dof) << '\n'
     << "tol: " << format_double(c.fit.tol) << " max_iters: " << c.fit.max_iters << '\n'
     << "iterations: " << o.iterations << '\n'
     << "converged: " << (o.converged ? "yes" : "no") << '\n'
     << "stop reason: " << cmvt::to_string(o.stop) << '\n';
  if (!o.failure.empty()) os << "failure: " << o.failure << '\n';
  os << "final loglik: " << format_double(o.loglik) << '\n'
     << "parameters:\n"
     << o.params.dump(2) << '\n';
  return os.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

inline DesignMatrices load_design(const RunConfig& c) {
  return build_design(load_dataset(c.endogenous, c.exogenous, c.p));
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 usage or input error, 2 numeric failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Conditional matrix-variate t EM estimation", "cmvt"};
  app.require_subcommand(1);

  std::string config_path, params_path, model_override, output_override;
  int max_iters_override = -1;
  double tol_override = -1.0;
  bool update_nu0_flag = false;

  auto* fit = app.add_subcommand("fit", "Fit one of the four models by EM");
  fit->add_option("--config", config_path, "config.json")->required();
  fit->add_option("--model", model_override, "Override the config model");
  fit->add_option("--max-iters", max_iters_override, "Override max_iters");
  fit->add_option("--tol", tol_override, "Override tol");
  fit->add_flag("--update-nu0", update_nu0_flag, "Update nu0 from its M-step equation");
  fit->add_option("--output", output_override, "Override the output directory");

  auto* eval = app.add_subcommand("eval-loglik", "Print the log-likelihood of given parameters");
  eval->add_option("--config", config_path, "config.json")->required();
  eval->add_option("--params", params_path, "params.json")->required();
  eval->add_option("--model", model_override, "Override the config model");

  std::string sim_model = "type1";
  int sim_p = 1, sim_T = 100;
  std::uint64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate", "Simulate a dataset from given parameters");
  sim->add_option("--params", params_path, "params.json or Minnesota hyperparameter JSON")
      ->required();
  sim->add_option("--model", sim_model, "type1 or type2");
  sim->add_option("--p", sim_p, "Lag order");
  sim->add_option("--T", sim_T, "Number of periods after the presample");
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--output", output_override, "Output directory")->required();

  auto* version = app.add_subcommand("version", "Print the version");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*version) {
      out << "cmvt " << kVersion << '\n';
      return 0;
    }
    if (*sim) {
      const io::json doc = io::read_json(params_path);
      const bool hyper = io::is_hyper_document(doc);
      if (sim_T < 1 || sim_p < 0) throw ParseError("simulate: need T >= 1 and p >= 0");
      const Type1Params truth = hyper ? minnesota::to_params(io::hyper_from_json(doc), sim_p)
                                      : io::params_from_json<ModelKind::kType1>(doc);
      const Eigen::Index n = truth.n();
      const Eigen::Index l = truth.d() - n * sim_p;
      if (l < 1) throw DimensionError("simulate: d - n p must be at least 1");
      simulate::RngStream rng(sim_seed);
      simulate::RngStream exo_rng = rng.split(1);
      MatrixXd exogenous(l, sim_T);
      exogenous.row(0).setOnes();
      for (Eigen::Index j = 1; j < l; ++j)
        for (Eigen::Index t = 0; t < sim_T; ++t) exogenous(j, t) = exo_rng.normal();
      const MatrixXd presample = MatrixXd::Zero(n, sim_p);
      simulate::RngStream path_rng = rng.split(2);
      TimeSeriesDataset data =
          sim_model == "type1"
              ? simulate::simulate_bvar(truth, exogenous, presample, path_rng)
          : sim_model == "type2"
              ? simulate::simulate_bvar(reinterpret_params<ModelKind::kType2>(truth), exogenous,
                                        presample, path_rng)
              : throw ParseError("simulate: model must be type1 or type2");
      const fs::path dir(output_override);
      fs::create_directories(dir);
      std::optional<std::string> exo_path;
      if (l > 1) exo_path = (dir / "exogenous.csv").string();
      save_dataset(data, (dir / "endogenous.csv").string(), exo_path);
      io::json sidecar{{"model", sim_model}, {"p", sim_p}, {"T", sim_T}, {"seed", sim_seed},
                       {"params", doc}};
      io::write_json((dir / "truth.json").string(), sidecar);
      out << "wrote " << (dir / "endogenous.csv").string() << '\n';
      return 0;
    }

    RunConfig config = load_config(config_path);
    if (!model_override.empty()) config.model = parse_model(model_override);
    config.validate();
    const DesignMatrices design = load_design(config);

    if (*eval) {
      const double ll = eval_loglik(config.model, config.p, io::read_json(params_path), design);
      out << format_double(ll) << '\n';
      return 0;
    }

    if (max_iters_override >= 0) config.fit.max_iters = max_iters_override;
    if (tol_override > 0.0) config.fit.tol = tol_override;
    if (update_nu0_flag) config.fit.update_nu0 = true;
    if (!output_override.empty()) config.output = output_override;
    config.validate();

    const FitOutcome outcome = run_fit(config, design);
    const fs::path dir(config.output);
    fs::create_directories(dir);
    io::write_json((dir / "params.json").string(), outcome.params);
    write_text(dir / "trace.csv", outcome.trace_csv);
    write_text(dir / "report.txt", report(config, design, outcome));
    out << "stop reason: " << cmvt::to_string(outcome.stop)
        << ", iterations: " << outcome.iterations
        << ", loglik: " << format_double(outcome.loglik) << '\n';
    if (outcome.stop == StopReason::kSolverFailure) {
      err << "numeric failure: " << outcome.failure << '\n';
      return 2;
    }
    return 0;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cmvt::cli
