// smallball: command-line front end.
//
//   smallball spectrum --max-index J
//   smallball laplace  --x X --horizon T --gamma G
//   smallball smalldev --x X --horizon T --level Y [--ratio t0,z,y0,eps]
//   smallball cdf      --x X --horizon T --level Y --method inversion|mc [--samples N] [--trunc J] [--seed S]
//   smallball sample   --kind hard|killed|ou|bm --x X --horizon T --step D (--eps E | --gamma G)
//                      --count N --seed S --out paths.csv
//   smallball verify   --theorem KIND --config file.toml --out report.json
//   smallball table    --kind ratio|ks --x X --eps E --horizons 100,200,400 --out table.csv
//
// Exit status: 0 success, 1 a verification record failed, 2 invalid input or
// numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smallball/config.hpp"
#include "smallball/smallball.hpp"

namespace {

using nlohmann::ordered_json;
using namespace smallball;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  return out;
}

// Writes to the file when a path is given, stdout otherwise.
void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    open_out(path) << text;
  }
}

std::string sidecar_path(const std::string& out) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + ".weights.csv")).string();
}

int cmd_spectrum(std::size_t J) {
  const SpectralBasis basis(J);
  std::ostringstream os;
  os.precision(17);
  os << "j,lambda,alpha\n";
  for (std::size_t j = 1; j <= J; ++j) os << j << ',' << basis.lambda(j) << ',' << basis.alpha(j) << '\n';
  std::cout << os.str();
  return 0;
}

int cmd_laplace(double x, double T, double gamma) {
  const double log_s = log_survival_probability(x, T, gamma);
  ordered_json j{{"survival", std::exp(log_s)},
                 {"log_survival", log_s},
                 {"asymptotic", survival_probability_asymptotic(x, T, gamma)}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_smalldev(double x, double T, double y, const std::vector<double>& ratio) {
  const auto sol = lilinde_probability(SmallDevProblem::from_path_problem(x, T, y));
  const auto closed = smallball_asymptotic(x, T, y);
  ordered_json j{{"gamma", sol.gamma},
                 {"beta", sol.beta},
                 {"log_probability", sol.log_probability},
                 {"probability", sol.probability},
                 {"closed_form_log_probability", closed.log_probability}};
  if (!ratio.empty()) {
    if (ratio.size() != 4) throw CLI::ValidationError("--ratio", "expects t0,z,y0,eps");
    j["ratio_g"] = ratio_g(x, ratio[0], ratio[1], ratio[2], ratio[3]);
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_cdf(double x, double T, double y, const std::string& method, std::uint64_t samples,
            std::size_t trunc, std::uint64_t seed, double tol, unsigned workers) {
  const CdfEstimate est = method == "inversion"
                              ? cdf_laplace_inversion(x, T, y, tol)
                              : cdf_kl_montecarlo(x, T, y, trunc, samples, seed, workers);
  ordered_json j{{"value", est.value},
                 {"standard_error", est.standard_error},
                 {"method", method == "inversion" ? "inversion" : "mc"}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct SampleArgs {
  std::string kind;
  double x = 0.0;
  double horizon = 1.0;
  double step = 0.01;
  std::optional<double> eps;
  std::optional<double> gamma;
  std::uint64_t count = 10;
  std::uint64_t seed = 1;
  std::string out;
  std::string mode = "weighted";
  std::uint64_t max_proposals = 100'000'000;
  unsigned workers = 1;
};

int cmd_sample(const SampleArgs& a) {
  std::vector<PathSample> paths;
  std::vector<double> weights;
  bool weighted = false;
  if (a.kind == "bm" || a.kind == "ou") {
    double gamma = 0.0;
    if (a.kind == "ou") {
      if (!a.gamma && !a.eps) throw CLI::ValidationError("--gamma", "ou needs --gamma or --eps");
      gamma = a.gamma ? *a.gamma : KillingSpec::from_hard_level(*a.eps).gamma;
    }
    paths.resize(a.count);
    const auto tag = a.kind == "bm" ? stream_tag::kBrownian : stream_tag::kOrnsteinUhlenbeck;
    parallel_for(a.count, a.workers, [&](std::size_t i) {
      Stream rng(a.seed, tag, i);
      paths[i] = a.kind == "bm" ? sample_bm_path(a.x, a.horizon, a.step, rng)
                                : sample_ou_path(a.x, gamma, a.horizon, a.step, rng);
    });
  } else if (a.kind == "hard" || a.kind == "killed") {
    const bool hard = a.kind == "hard";
    if (hard && !a.eps) throw CLI::ValidationError("--eps", "hard needs --eps");
    if (!hard && !a.gamma && !a.eps) throw CLI::ValidationError("--gamma", "killed needs --gamma or --eps");
    const double gamma = a.gamma ? *a.gamma : KillingSpec::from_hard_level(a.eps.value_or(1.0)).gamma;
    const auto mode = a.mode == "rejection" ? KilledMode::rejection : KilledMode::weighted;
    weighted = !hard && mode == KilledMode::weighted;
    if (weighted && (a.out.empty() || a.out == "-")) {
      throw CLI::ValidationError("--out", "weighted output needs a file for the weight sidecar");
    }
    EnsembleConfig cfg{a.seed, hard ? stream_tag::kHardConditioned : stream_tag::kKilled, a.count,
                       a.max_proposals, a.workers};
    const auto ens = collect(cfg, [&](Stream& rng) -> std::optional<Observation> {
      Observation o;
      if (hard) {
        auto p = propose_conditioned_hard(a.x, a.horizon, *a.eps, a.step, rng);
        if (!p) return std::nullopt;
        o.values = std::move(p->values);
      } else {
        auto d = propose_conditioned_killed(a.x, a.horizon, gamma, a.step, rng, mode);
        if (!d) return std::nullopt;
        o.values = std::move(d->path.values);
        o.weight = d->weight;
        o.eta = d->eta;
      }
      return o;
    });
    for (const auto& o : ens.accepted) {
      paths.push_back(PathSample{a.x, a.step, o.values});
      weights.push_back(o.weight);
    }
    std::clog << "smallball: " << ens.accepted.size() << " paths from " << ens.proposals
              << " proposals\n";
  } else {
    throw CLI::ValidationError("--kind", "must be hard, killed, ou or bm");
  }

  std::ostringstream os;
  os.precision(17);
  os << "path_id,t,value\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t k = 0; k < paths[i].values.size(); ++k) {
      os << i << ',' << paths[i].time(k) << ',' << paths[i].values[k] << '\n';
    }
  }
  emit(os.str(), a.out);
  if (weighted) {
    std::ostringstream ws;
    ws.precision(17);
    ws << "path_id,weight\n";
    for (std::size_t i = 0; i < weights.size(); ++i) ws << i << ',' << weights[i] << '\n';
    emit(ws.str(), sidecar_path(a.out));
  }
  return 0;
}

int cmd_verify(const std::string& theorem, const std::string& config, const std::string& out,
               unsigned workers, bool timing) {
  ExperimentSpec spec = load_experiment_spec(config);
  if (!theorem.empty() && parse_theorem(theorem) != spec.theorem) {
    throw spec_error("--theorem " + theorem + " does not match config theorem '" +
                     to_string(spec.theorem) + "'");
  }
  const auto report = run_experiment(spec, workers);
  emit(report_to_json(report, timing).dump(2) + "\n", out);
  for (const auto& r : report.records) {
    std::clog << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.statistic << " (threshold "
              << r.threshold << ")\n";
  }
  return report.pass() ? 0 : 1;
}

int cmd_table(const std::string& kind, double x, double eps, const std::vector<double>& horizons,
              const std::string& out, std::uint64_t seed, unsigned workers) {
  ExperimentSpec base;
  base.set("x", x).set("eps", eps).set("seed", static_cast<double>(seed));
  const auto k = kind == "ratio" ? TableKind::ratio : TableKind::ks;
  emit(convergence_table(k, horizons, base, workers), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brownian motion conditioned on a small L2 norm"};
  app.require_subcommand(1);
  unsigned workers = default_workers();
  bool quiet = false;
  app.add_option("--workers", workers, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress regime and grid warnings");

  std::size_t J = 10;
  auto* spectrum = app.add_subcommand("spectrum", "KL eigenvalues and shift coefficients (CSV)");
  spectrum->add_option("--max-index", J, "Truncation J")->required()->check(CLI::PositiveNumber);

  double x = 0.0, T = 1.0, gamma = 1.0, level = 1.0, tol = 1e-10;
  auto* laplace = app.add_subcommand("laplace", "Survival probability E_x exp(-gamma^2/2 I_T)");
  laplace->add_option("--x", x, "Start point");
  laplace->add_option("--horizon", T, "Horizon T")->required();
  laplace->add_option("--gamma", gamma, "Killing parameter gamma")->required();

  std::vector<double> ratio;
  auto* smalldev = app.add_subcommand("smalldev", "Small-deviation asymptotics of P_x(I_T <= y)");
  smalldev->add_option("--x", x, "Start point");
  smalldev->add_option("--horizon", T, "Horizon T")->required();
  smalldev->add_option("--level", level, "Level y")->required();
  smalldev->add_option("--ratio", ratio, "t0,z,y0,eps for the limit ratio g_x")->delimiter(',');

  std::string method = "inversion";
  std::uint64_t samples = 1'000'000, seed = 1;
  std::size_t trunc = 1000;
  auto* cdf = app.add_subcommand("cdf", "Exact P_x(I_T <= y)");
  cdf->add_option("--x", x, "Start point");
  cdf->add_option("--horizon", T, "Horizon T")->required();
  cdf->add_option("--level", level, "Level y")->required();
  cdf->add_option("--method", method)->check(CLI::IsMember({"inversion", "mc"}));
  cdf->add_option("--samples", samples, "Monte Carlo draws");
  cdf->add_option("--trunc", trunc, "KL truncation J");
  cdf->add_option("--seed", seed);
  cdf->add_option("--tol", tol, "Inversion tolerance");

  SampleArgs sa;
  double eps_value = 0.0, gamma_value = 0.0;
  auto* sample = app.add_subcommand("sample", "Simulate paths (CSV path_id,t,value)");
  sample->add_option("--kind", sa.kind)->required()->check(CLI::IsMember({"hard", "killed", "ou", "bm"}));
  sample->add_option("--x", sa.x);
  sample->add_option("--horizon", sa.horizon)->required();
  sample->add_option("--step", sa.step)->required();
  auto* eps_opt = sample->add_option("--eps", eps_value);
  auto* gamma_opt = sample->add_option("--gamma", gamma_value);
  sample->add_option("--count", sa.count)->required();
  sample->add_option("--seed", sa.seed);
  sample->add_option("--out", sa.out, "Output CSV (stdout if omitted)");
  sample->add_option("--mode", sa.mode, "Killed sampling mode")
      ->check(CLI::IsMember({"weighted", "rejection"}));
  sample->add_option("--max-proposals", sa.max_proposals);

  std::string theorem, config, out;
  bool no_timing = false;
  auto* verify = app.add_subcommand("verify", "Run an experiment recipe and write a JSON report");
  verify->add_option("--theorem", theorem, "Theorem kind (must match the config)");
  verify->add_option("--config", config, "TOML experiment spec")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", out, "Report path (stdout if omitted)");
  verify->add_flag("--no-timing", no_timing, "Write elapsed_s as null (byte-stable reports)");

  std::string table_kind = "ratio";
  double eps = 1.0;
  std::vector<double> horizons;
  auto* table = app.add_subcommand("table", "Convergence table (CSV)");
  table->add_option("--kind", table_kind)->check(CLI::IsMember({"ratio", "ks"}));
  table->add_option("--x", x);
  table->add_option("--eps", eps);
  table->add_option("--horizons", horizons)->required()->delimiter(',');
  table->add_option("--out", out);
  table->add_option("--seed", seed);

  // help requests exit 0; every other parse or validation error is usage error 2
  const auto usage_exit = [&app](const CLI::Error& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return usage_exit(e);
  }
  if (quiet) set_warnings_enabled(false);

  try {
    if (*spectrum) return cmd_spectrum(J);
    if (*laplace) return cmd_laplace(x, T, gamma);
    if (*smalldev) return cmd_smalldev(x, T, level, ratio);
    if (*cdf) return cmd_cdf(x, T, level, method, samples, trunc, seed, tol, workers);
    if (*sample) {
      if (*eps_opt) sa.eps = eps_value;
      if (*gamma_opt) sa.gamma = gamma_value;
      sa.workers = workers;
      return cmd_sample(sa);
    }
    if (*verify) return cmd_verify(theorem, config, out, workers, !no_timing);
    if (*table) return cmd_table(table_kind, x, eps, horizons, out, seed, workers);
  } catch (const CLI::Error& e) {
    return usage_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "smallball: error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
