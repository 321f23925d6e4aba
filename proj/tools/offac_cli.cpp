#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "offac/chain.hpp"
#include "offac/harness.hpp"
#include "offac/trace_io.hpp"

using namespace offac;
using ojson = nlohmann::ordered_json;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::NonStochasticRow:
    case ErrorKind::RewardOutOfRange:
    case ErrorKind::BadDiscount:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NotExplorable:
    case ErrorKind::RegimeMismatch:
    case ErrorKind::InvalidLambda:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidAlpha:
    case ErrorKind::InvalidTau:
      return 2;
    default:
      return 3;
  }
}

std::vector<std::vector<double>> rows(const Table& t) {
  std::vector<std::vector<double>> out(t.n, std::vector<double>(t.m));
  for (int s = 0; s < t.n; ++s)
    for (int a = 0; a < t.m; ++a) out[s][a] = t(s, a);
  return out;
}

int cmd_check(const std::string& file, double precision) {
  Mdp mdp = load_mdp(file);
  Explorability ex = check_explorability(mdp);
  ojson j;
  j["valid"] = true;
  j["n"] = mdp.n;
  j["m"] = mdp.m;
  j["gamma"] = mdp.gamma;
  j["explorable"] = ex.explorable;
  j["components"] = ex.components;
  j["component"] = ex.component;
  if (ex.explorable) {
    // uniform behavior policy
    Policy pi_b = Policy::uniform(mdp.n, mdp.m);
    Eigen::MatrixXd kernel = induced_kernels(mdp, pi_b).state;
    Eigen::VectorXd mu = stationary_distribution(kernel);
    j["mu_b"] = std::vector<double>(mu.data(), mu.data() + mu.size());
    j["precision"] = precision;
    try {
      MixingResult mix = mixing_time(kernel, mu, precision);
      j["z"] = mix.z;
      j["sigma_estimate"] = mix.profile.sigma_estimate;
      // constant omega = precision
      j["K_constant"] = threshold_K(Schedule{0.0, 1.0, precision, 1.0, 0.0}, kernel, mu);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoMixing) throw;
      j["z"] = nullptr;
      j["mixing_error"] = e.what();
    }
  }
  std::cout << j.dump(2) << "\n";
  return ex.explorable ? 0 : 2;
}

int cmd_solve(const std::string& file) {
  Mdp mdp = load_mdp(file);
  QStarResult qs = solve_q_star(mdp);
  Policy pi_b = Policy::uniform(mdp.n, mdp.m);
  ojson j;
  j["q_star"] = rows(qs.q);
  j["greedy_policy"] = rows(qs.policy);
  j["residual"] = qs.residual;
  j["sweeps"] = qs.sweeps;
  j["q_uniform"] = rows(solve_q_pi(mdp, pi_b));
  if (check_explorability(mdp).explorable) {
    j["certificate_uniform_behavior"] = ojson::parse(cert_to_json(certify_or_fallback(mdp, pi_b)));
    j["target_factor"] = target_contraction(mdp, pi_b);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

void print_summary(const ExperimentSummary& s) {
  const auto& first = s.stats.front();
  const auto& last = s.stats.back();
  std::printf("%s: %zu runs, mse %.6g at t=%lld -> %.6g at t=%lld, pathwise %s\n", s.name.c_str(), s.runs.size(),
              first.mse_mean, static_cast<long long>(first.t), last.mse_mean, static_cast<long long>(last.t),
              s.pathwise.all_pass() ? "PASS" : "FAIL");
  std::printf("output: %s\n", s.output_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy single-loop actor-critic experiments"};
  app.require_subcommand(1);

  std::string file;
  auto* check = app.add_subcommand("check-mdp", "Validate an MDP file and test explorability");
  double precision = 0.1;
  check->add_option("file", file, "MDP JSON")->required();
  check->add_option("--precision", precision, "mixing precision for z")->check(CLI::Range(1e-12, 2.0));

  auto* solve = app.add_subcommand("solve", "Print Q*, the greedy policy and a weight certificate");
  solve->add_option("file", file, "MDP JSON")->required();

  int workers = -1;
  std::string out_dir;
  auto* runc = app.add_subcommand("run", "Run every seed of a config");
  runc->add_option("config", file, "config JSON")->required();
  runc->add_option("--workers", workers, "worker threads (0 = all cores)");
  runc->add_option("--out", out_dir, "override output_dir");

  std::string axis;
  std::vector<std::string> values;
  bool hold_ratio = false;
  auto* sw = app.add_subcommand("sweep", "Grid sweep along one axis");
  sw->add_option("config", file, "base config JSON")->required();
  sw->add_option("--axis", axis, "omega0 | eta | critic | actor")->required();
  sw->add_option("--values", values, "axis values")->required()->delimiter(',');
  sw->add_flag("--hold-ratio", hold_ratio, "scale alpha0 with omega0");
  sw->add_option("--workers", workers, "worker threads (0 = all cores)");
  sw->add_option("--out", out_dir, "override output_dir");

  std::string mode = "pathwise";
  auto* diag = app.add_subcommand("diagnose", "Rebuild the verdict report of an experiment directory");
  diag->add_option("dir", file, "experiment directory")->required();
  diag->add_option("--mode", mode, "pathwise | monte_carlo")->check(CLI::IsMember({"pathwise", "monte_carlo"}));

  auto* bounds = app.add_subcommand("bounds", "Evaluate the finite-time MSE bound");
  bounds->add_option("params", file, "bound parameters JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(file, precision);
    if (*solve) return cmd_solve(file);
    if (*runc || *sw) {
      RunConfig cfg = load_config(file);
      if (workers >= 0) cfg.workers = workers;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      cfg.validate();
      if (*runc) {
        print_summary(run_experiment(cfg));
        return 0;
      }
      SweepOptions opts;
      opts.hold_ratio = hold_ratio;
      SweepResult res = sweep(cfg, parse_axis(axis), values, opts);
      for (const auto& e : res.experiments) print_summary(e);
      std::printf("combined: %s\n", res.combined_csv.c_str());
      return 0;
    }
    if (*diag) {
      VerdictReport rep =
          diagnose_directory(file, mode == "pathwise" ? VerifyMode::pathwise : VerifyMode::monte_carlo);
      std::cout << rep.to_json() << "\n";
      return rep.all_pass() ? 0 : 2;
    }
    if (*bounds) {
      BoundParams p = parse_bound_params(read_file(file));
      ojson j;
      j["bound"] = theoretical_bound(p);
      j["constants"] = p.constants;
      j["regime"] = p.eta == 0.0 ? "constant" : p.eta == 1.0 ? "harmonic" : "polynomial";
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
