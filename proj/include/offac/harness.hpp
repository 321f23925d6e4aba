#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offac/actor_critic.hpp"
#include "offac/diagnostics.hpp"
#include "offac/oracle.hpp"

namespace offac {

enum class Spacing { linear, log };

struct RunConfig {
  std::string name = "run";
  std::string mdp_path;  // resolved against the config file's directory
  // Empty means uniform; otherwise one row per state.
  std::vector<std::vector<double>> behavior;
  double lazy_lambda = 0.0;
  ActorRule actor = ActorRule::softmax;
  CriticRule critic = CriticRule::etd;
  Schedule schedule;
  std::int64_t horizon = 1;
  std::vector<std::uint64_t> seeds;
  std::int64_t checkpoint_every = 100;
  // log: about checkpoint_every points per decade instead of a fixed stride
  Spacing checkpoint_spacing = Spacing::linear;
  std::string output_dir = "out";
  bool allow_non_explorable = false;
  int workers = 0;  // 0 = hardware concurrency
  // Every step is diagnosed (with T1..T4) when the horizon is at most this.
  std::int64_t dense_limit = 10000;

  void validate() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
std::string config_to_json(const RunConfig& cfg);

// Everything shared by the runs of one experiment.
struct Setup {
  Mdp mdp;  // after the lazy transform
  Policy pi_b;
  QStarResult q_star;
  Eigen::VectorXd mu_b;
  WeightCert cert;
  std::int64_t K = 0;
  int z_K = 1;
};

Setup prepare(const RunConfig& cfg);
Setup prepare(const RunConfig& cfg, const Mdp& mdp);

std::vector<std::int64_t> checkpoints(const RunConfig& cfg);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<Snapshot> snapshots;
  RunStats stats;
};

struct CheckpointStat {
  std::int64_t t = 0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double W_mean = 0.0;
  double xi_mean = 0.0;
  double chi_mean = 0.0;
};

struct ExperimentSummary {
  std::string name;
  std::string output_dir;
  std::vector<CheckpointStat> stats;
  std::vector<SeedResult> runs;
  VerdictReport pathwise;
  std::optional<VerdictReport> monte_carlo;
  double q_min = 0.0;
  double q_max = 0.0;
};

// Runs every seed, writes trace_<seed>.csv, diag_<seed>.csv, summary.json,
// report.json, config.json and mdp.json into cfg.output_dir.
ExperimentSummary run_experiment(const RunConfig& cfg, bool write_files = true);

VerdictContext verdict_context(const RunConfig& cfg, const Setup& setup);

struct BoundParams {
  double gamma = 0.5;
  double omega0 = 0.01;
  double alpha0 = 1.0;
  double h = 1.0;
  double eta = 0.0;
  double tau0 = 0.0;
  std::int64_t K = 0;
  double z = 1.0;
  double M_critic = 1.0;
  std::int64_t T = 0;
  std::string constants = "unified";  // unified | is | etd
  std::string regime;                 // optional: constant | harmonic | polynomial
};

double theoretical_bound(const BoundParams& p);
BoundParams parse_bound_params(const std::string& text);

double M_critic(CriticRule critic, int n, int m, double gamma, double pi_b_min, double mu_b_min);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi);

enum class SweepAxis { omega0, eta, critic, actor };
SweepAxis parse_axis(const std::string& name);

struct SweepOptions {
  // Scale alpha0 together with omega0 so C_r stays fixed.
  bool hold_ratio = false;
};

struct SweepResult {
  std::vector<std::string> values;
  std::vector<ExperimentSummary> experiments;
  std::string combined_csv;
};

SweepResult sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                  const SweepOptions& opts = {});

// Rebuilds the verdict report from the diag_*.csv files of an experiment directory.
VerdictReport diagnose_directory(const std::string& dir, VerifyMode mode);

}  // namespace offac
