#include "offac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "offac/chain.hpp"
#include "offac/trace_io.hpp"

namespace offac {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

template <class T>
T field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(path, e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    bool ok = std::any_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; });
    if (!ok) throw Error(ErrorKind::ParseError, "unknown key '" + (where.empty() ? k : where + "." + k) + "'");
  }
}

Spacing parse_spacing(const std::string& s) {
  if (s == "linear") return Spacing::linear;
  if (s == "log") return Spacing::log;
  throw ValidationError("checkpoint_spacing", "expected linear or log, got '" + s + "'");
}

Policy behavior_policy(const RunConfig& cfg, const Mdp& mdp) {
  if (cfg.behavior.empty()) return Policy::uniform(mdp.n, mdp.m);
  if (static_cast<int>(cfg.behavior.size()) != mdp.n)
    throw ValidationError("behavior", "expected " + std::to_string(mdp.n) + " rows");
  Policy pi(mdp.n, mdp.m);
  for (int s = 0; s < mdp.n; ++s) {
    const auto& row = cfg.behavior[s];
    if (static_cast<int>(row.size()) != mdp.m)
      throw ValidationError("behavior[" + std::to_string(s) + "]", "expected " + std::to_string(mdp.m) + " entries");
    double sum = 0.0;
    for (int a = 0; a < mdp.m; ++a) {
      if (!(row[a] > 0.0)) throw ValidationError("behavior[" + std::to_string(s) + "]", "entries must be positive");
      pi(s, a) = row[a];
      sum += row[a];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("behavior[" + std::to_string(s) + "]", "row must sum to 1");
    pi.row(s) /= sum;
  }
  return pi;
}

class SeedObserver : public StepObserver {
 public:
  SeedObserver(Diagnostician& diag, const std::vector<std::int64_t>& times, bool dense)
      : diag_(diag), times_(times), dense_(dense) {}

  bool wants(std::int64_t t) const override {
    return dense_ || std::binary_search(times_.begin(), times_.end(), t);
  }
  void observe(const StepContext& ctx) override { out.push_back(diag_.measure(ctx)); }

  std::vector<Snapshot> out;

 private:
  Diagnostician& diag_;
  const std::vector<std::int64_t>& times_;
  bool dense_;
};

SeedResult run_seed(const RunConfig& cfg, const Setup& setup, const std::vector<std::int64_t>& times,
                    std::uint64_t seed) {
  const bool dense = cfg.horizon <= cfg.dense_limit;
  Diagnostician diag(setup.mdp, setup.pi_b, setup.q_star.q, setup.cert, cfg.schedule, cfg.critic);
  diag.set_decomposition(dense);
  SeedObserver obs(diag, times, dense);
  RunOptions opts;
  opts.horizon = cfg.horizon;
  opts.seed = seed;
  opts.observer = &obs;
  SeedResult res;
  res.seed = seed;
  run(setup.mdp, setup.pi_b, cfg.schedule, cfg.actor, cfg.critic, opts, &res.stats);
  res.snapshots = std::move(obs.out);
  return res;
}

std::string run_id(const RunConfig& cfg, std::uint64_t seed) { return cfg.name + "-" + std::to_string(seed); }

std::string summary_json(const RunConfig& cfg, const Setup& setup, const ExperimentSummary& sum) {
  ojson j;
  j["name"] = cfg.name;
  j["actor"] = to_string(cfg.actor);
  j["critic"] = to_string(cfg.critic);
  j["horizon"] = cfg.horizon;
  j["seeds"] = cfg.seeds;
  j["K"] = setup.K;
  j["z_K"] = setup.z_K;
  j["certificate"] = ojson::parse(cert_to_json(setup.cert));
  j["iterate_range"] = {{"q_min", sum.q_min}, {"q_max", sum.q_max}};
  auto& arr = j["checkpoints"] = ojson::array();
  for (const auto& c : sum.stats)
    arr.push_back({{"t", c.t},
                   {"mse_mean", c.mse_mean},
                   {"mse_std", c.mse_std},
                   {"W_mean", c.W_mean},
                   {"xi_mean", c.xi_mean},
                   {"chi_mean", c.chi_mean}});
  return j.dump(2);
}

std::vector<CheckpointStat> reduce(const std::vector<SeedResult>& runs) {
  std::vector<CheckpointStat> out;
  if (runs.empty()) return out;
  const std::size_t rows = runs.front().snapshots.size();
  const double R = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < rows; ++i) {
    CheckpointStat c;
    c.t = runs.front().snapshots[i].t;
    for (const auto& r : runs) {
      const Snapshot& x = r.snapshots[i];
      c.mse_mean += x.mse;
      c.W_mean += x.W;
      c.xi_mean += x.xi;
      c.chi_mean += x.chi;
    }
    c.mse_mean /= R;
    c.W_mean /= R;
    c.xi_mean /= R;
    c.chi_mean /= R;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.snapshots[i].mse - c.mse_mean) * (r.snapshots[i].mse - c.mse_mean);
    c.mse_std = runs.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
    out.push_back(c);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (mdp_path.empty()) throw ValidationError("mdp_path", "required");
  if (!(lazy_lambda >= 0.0 && lazy_lambda < 1.0)) throw ValidationError("lazy_lambda", "must lie in [0,1)");
  schedule.validate();
  if (critic != CriticRule::oracle && schedule.alpha0 / std::pow(schedule.h, schedule.eta) > 1.0)
    throw ValidationError("schedule.alpha0", "alpha_0 exceeds 1");
  if (horizon < 1) throw ValidationError("horizon", "must be at least 1");
  if (seeds.empty()) throw ValidationError("seeds", "must be nonempty");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw ValidationError("seeds", "seeds must be distinct");
  if (checkpoint_every < 1) throw ValidationError("checkpoint_every", "must be at least 1");
  if (workers < 0) throw ValidationError("workers", "must be nonnegative");
  if (dense_limit < 0) throw ValidationError("dense_limit", "must be nonnegative");
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "config must be a JSON object");
  reject_unknown(j,
                 {"name", "mdp_path", "behavior", "lazy_lambda", "actor", "critic", "schedule", "horizon", "seeds",
                  "checkpoint_every", "checkpoint_spacing", "output_dir", "allow_non_explorable", "workers",
                  "dense_limit"},
                 "");
  RunConfig cfg;
  if (j.contains("name")) cfg.name = field<std::string>(j, "name", "name");
  cfg.mdp_path = field<std::string>(j, "mdp_path", "mdp_path");
  if (!cfg.mdp_path.empty() && fs::path(cfg.mdp_path).is_relative())
    cfg.mdp_path = (fs::path(base_dir) / cfg.mdp_path).lexically_normal().string();
  if (j.contains("behavior")) {
    const json& b = j["behavior"];
    if (b.is_string()) {
      if (b.get<std::string>() != "uniform") throw ValidationError("behavior", "expected \"uniform\" or a table");
    } else {
      cfg.behavior = field<std::vector<std::vector<double>>>(j, "behavior", "behavior");
    }
  }
  if (j.contains("lazy_lambda")) cfg.lazy_lambda = field<double>(j, "lazy_lambda", "lazy_lambda");
  if (j.contains("actor")) cfg.actor = parse_actor(field<std::string>(j, "actor", "actor"));
  if (j.contains("critic")) cfg.critic = parse_critic(field<std::string>(j, "critic", "critic"));
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    if (!s.is_object()) throw ValidationError("schedule", "must be an object");
    reject_unknown(s, {"eta", "alpha0", "omega0", "h", "tau0"}, "schedule");
    if (s.contains("eta")) cfg.schedule.eta = field<double>(s, "eta", "schedule.eta");
    if (s.contains("alpha0")) cfg.schedule.alpha0 = field<double>(s, "alpha0", "schedule.alpha0");
    if (s.contains("omega0")) cfg.schedule.omega0 = field<double>(s, "omega0", "schedule.omega0");
    if (s.contains("h")) cfg.schedule.h = field<double>(s, "h", "schedule.h");
    if (s.contains("tau0")) cfg.schedule.tau0 = field<double>(s, "tau0", "schedule.tau0");
  }
  cfg.horizon = field<std::int64_t>(j, "horizon", "horizon");
  cfg.seeds = field<std::vector<std::uint64_t>>(j, "seeds", "seeds");
  if (j.contains("checkpoint_every")) cfg.checkpoint_every = field<std::int64_t>(j, "checkpoint_every", "checkpoint_every");
  if (j.contains("checkpoint_spacing"))
    cfg.checkpoint_spacing = parse_spacing(field<std::string>(j, "checkpoint_spacing", "checkpoint_spacing"));
  if (j.contains("output_dir")) {
    cfg.output_dir = field<std::string>(j, "output_dir", "output_dir");
    if (fs::path(cfg.output_dir).is_relative())
      cfg.output_dir = (fs::path(base_dir) / cfg.output_dir).lexically_normal().string();
  }
  if (j.contains("allow_non_explorable"))
    cfg.allow_non_explorable = field<bool>(j, "allow_non_explorable", "allow_non_explorable");
  if (j.contains("workers")) cfg.workers = field<int>(j, "workers", "workers");
  if (j.contains("dense_limit")) cfg.dense_limit = field<std::int64_t>(j, "dense_limit", "dense_limit");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_file(path), fs::path(path).parent_path().string());
}

std::string config_to_json(const RunConfig& cfg) {
  ojson j;
  j["name"] = cfg.name;
  j["mdp_path"] = cfg.mdp_path;
  if (cfg.behavior.empty())
    j["behavior"] = "uniform";
  else
    j["behavior"] = cfg.behavior;
  j["lazy_lambda"] = cfg.lazy_lambda;
  j["actor"] = to_string(cfg.actor);
  j["critic"] = to_string(cfg.critic);
  j["schedule"] = {{"eta", cfg.schedule.eta},
                   {"alpha0", cfg.schedule.alpha0},
                   {"omega0", cfg.schedule.omega0},
                   {"h", cfg.schedule.h},
                   {"tau0", cfg.schedule.tau0}};
  j["horizon"] = cfg.horizon;
  j["seeds"] = cfg.seeds;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["checkpoint_spacing"] = cfg.checkpoint_spacing == Spacing::log ? "log" : "linear";
  j["output_dir"] = cfg.output_dir;
  j["allow_non_explorable"] = cfg.allow_non_explorable;
  j["workers"] = cfg.workers;
  j["dense_limit"] = cfg.dense_limit;
  return j.dump(2);
}

Setup prepare(const RunConfig& cfg) { return prepare(cfg, load_mdp(cfg.mdp_path)); }

Setup prepare(const RunConfig& cfg, const Mdp& raw) {
  Setup s;
  s.mdp = lazy_transform(raw, cfg.lazy_lambda);
  s.pi_b = behavior_policy(cfg, s.mdp);
  Explorability ex = check_explorability(s.mdp);
  if (!ex.explorable && !cfg.allow_non_explorable)
    throw Error(ErrorKind::NotExplorable,
                "the state graph has " + std::to_string(ex.components) +
                    " strongly connected components, so the behavior chain is not irreducible; "
                    "set allow_non_explorable to run anyway");
  s.q_star = solve_q_star(s.mdp);
  s.mu_b = behavior_distribution(s.mdp, s.pi_b);
  s.cert = certify_or_fallback(s.mdp, s.pi_b);
  Eigen::MatrixXd kernel = induced_kernels(s.mdp, s.pi_b).state;
  TvCurve curve(kernel, s.mu_b);
  s.K = threshold_K(cfg.schedule, curve);
  s.z_K = curve.mixing_time(std::min(stepsize_at(cfg.schedule, s.K).omega, 2.0));
  return s;
}

std::vector<std::int64_t> checkpoints(const RunConfig& cfg) {
  std::vector<std::int64_t> out;
  if (cfg.checkpoint_spacing == Spacing::linear) {
    for (std::int64_t t = 0; t < cfg.horizon; t += cfg.checkpoint_every) out.push_back(t);
  } else {
    out.push_back(0);
    for (std::int64_t k = 0;; ++k) {
      auto t = static_cast<std::int64_t>(std::floor(std::pow(10.0, static_cast<double>(k) / cfg.checkpoint_every)));
      if (t >= cfg.horizon) break;
      if (t > out.back()) out.push_back(t);
    }
  }
  out.push_back(cfg.horizon);
  return out;
}

VerdictContext verdict_context(const RunConfig& cfg, const Setup& setup) {
  VerdictContext ctx;
  ctx.gamma = setup.mdp.gamma;
  ctx.pi_b_min = min_entry(setup.pi_b);
  ctx.nu_min = setup.cert.nu_min();
  ctx.c_hat = setup.cert.certified_factor;
  ctx.cert_valid = !setup.cert.fallback;
  ctx.nu.assign(setup.cert.nu.data(), setup.cert.nu.data() + setup.cert.nu.size());
  ctx.schedule = cfg.schedule;
  ctx.critic = cfg.critic;
  ctx.K = setup.K;
  auto curve = std::make_shared<TvCurve>(induced_kernels(setup.mdp, setup.pi_b).state, setup.mu_b);
  auto cache = std::make_shared<std::pair<std::mutex, std::map<std::int64_t, int>>>();
  Schedule sched = cfg.schedule;
  ctx.z_of = [curve, cache, sched](std::int64_t t) {
    std::lock_guard<std::mutex> lock(cache->first);
    auto it = cache->second.find(t);
    if (it != cache->second.end()) return it->second;
    int z = curve->mixing_time(std::min(stepsize_at(sched, t).omega, 2.0));
    cache->second.emplace(t, z);
    return z;
  };
  return ctx;
}

ExperimentSummary run_experiment(const RunConfig& cfg, bool write_files) {
  cfg.validate();
  Setup setup = prepare(cfg);
  const std::vector<std::int64_t> times = checkpoints(cfg);

  ExperimentSummary sum;
  sum.name = cfg.name;
  sum.output_dir = cfg.output_dir;
  sum.runs.resize(cfg.seeds.size());

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw;
  workers = std::min(workers, cfg.seeds.size());
  if (write_files) fs::create_directories(cfg.output_dir);

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      try {
        sum.runs[i] = run_seed(cfg, setup, times, cfg.seeds[i]);
        if (write_files) {
          const auto seed = cfg.seeds[i];
          auto path = [&](const char* kind) {
            return (fs::path(cfg.output_dir) / (std::string(kind) + "_" + std::to_string(seed) + ".csv")).string();
          };
          write_trace_csv(path("trace"), run_id(cfg, seed), seed, sum.runs[i].snapshots);
          write_diag_csv(path("diag"), sum.runs[i].snapshots);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = cfg.seeds.size();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);

  sum.q_min = sum.runs.front().stats.q_min;
  sum.q_max = sum.runs.front().stats.q_max;
  for (const auto& r : sum.runs) {
    sum.q_min = std::min(sum.q_min, r.stats.q_min);
    sum.q_max = std::max(sum.q_max, r.stats.q_max);
  }
  sum.stats = reduce(sum.runs);

  VerdictContext ctx = verdict_context(cfg, setup);
  std::vector<std::vector<Snapshot>> traces;
  traces.reserve(sum.runs.size());
  for (const auto& r : sum.runs) traces.push_back(r.snapshots);
  sum.pathwise = verify_inequalities(traces, ctx, VerifyMode::pathwise);
  if (traces.size() >= 30 && cfg.critic != CriticRule::oracle)
    sum.monte_carlo = verify_inequalities(traces, ctx, VerifyMode::monte_carlo, {setup.K, setup.K + 1000});

  if (write_files) {
    const fs::path dir(cfg.output_dir);
    write_file((dir / "summary.json").string(), summary_json(cfg, setup, sum));
    ojson rep;
    rep["pathwise"] = ojson::parse(sum.pathwise.to_json());
    rep["monte_carlo"] = sum.monte_carlo ? ojson::parse(sum.monte_carlo->to_json()) : ojson(nullptr);
    write_file((dir / "report.json").string(), rep.dump(2));
    RunConfig copy = cfg;
    copy.mdp_path = "mdp.json";
    copy.output_dir = ".";
    write_file((dir / "config.json").string(), config_to_json(copy));
    save_mdp(load_mdp(cfg.mdp_path), (dir / "mdp.json").string());
  }
  return sum;
}

VerdictReport diagnose_directory(const std::string& dir, VerifyMode mode) {
  RunConfig cfg = load_config((fs::path(dir) / "config.json").string());
  Setup setup = prepare(cfg);
  VerdictContext ctx = verdict_context(cfg, setup);
  std::vector<std::vector<Snapshot>> traces;
  for (auto seed : cfg.seeds)
    traces.push_back(read_diag_csv((fs::path(dir) / ("diag_" + std::to_string(seed) + ".csv")).string()));
  MonteCarloWindow window;
  if (mode == VerifyMode::monte_carlo) window = {setup.K, setup.K + 1000};
  return verify_inequalities(traces, ctx, mode, window);
}

double M_critic(CriticRule critic, int n, int m, double gamma, double pi_b_min, double mu_b_min) {
  const double g = 1.0 - gamma;
  switch (critic) {
    case CriticRule::is:
      return n * m / (g * g * g * pi_b_min * pi_b_min * pi_b_min * mu_b_min);
    case CriticRule::etd:
      return 1.0 / (g * g);
    case CriticRule::oracle:
      return 0.0;
  }
  return 0.0;
}

double theoretical_bound(const BoundParams& p) {
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw Error(ErrorKind::BadDiscount, "gamma must lie in (0,1)");
  if (!(p.omega0 > 0.0 && p.alpha0 > 0.0 && p.h > 0.0 && p.z >= 1.0 && p.M_critic >= 0.0 && p.tau0 >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "bound parameters out of range");
  if (p.T < p.K) throw Error(ErrorKind::InvalidArgument, "the bound needs T >= K");
  if (!(p.eta >= 0.0 && p.eta <= 1.0)) throw Error(ErrorKind::RegimeMismatch, "eta must lie in [0,1]");

  std::string regime = p.eta == 0.0 ? "constant" : p.eta == 1.0 ? "harmonic" : "polynomial";
  if (!p.regime.empty() && p.regime != regime)
    throw Error(ErrorKind::RegimeMismatch,
                "regime '" + p.regime + "' requested but eta=" + std::to_string(p.eta) + " selects " + regime);

  double bias = 3.0, stoch = 216.0;
  bool unified = true;
  if (p.constants == "etd") {
    bias = 1.5;
    stoch = 14.0;
    unified = false;
  } else if (p.constants == "is") {
    unified = false;
  } else if (p.constants != "unified") {
    throw Error(ErrorKind::InvalidArgument, "constants must be unified, is or etd");
  }

  const double g = 1.0 - p.gamma;
  const double w = p.omega0;
  const double cr = p.omega0 / p.alpha0;
  const double T = static_cast<double>(p.T), K = static_cast<double>(p.K);
  const double tau2 = p.tau0 * p.tau0;
  const double B = bias / (g * g);

  if (regime == "constant") {
    return B * std::pow(1.0 - w * g / 2.0, T - K) + 12.0 * tau2 / std::pow(g, 4) +
           2.0 * stoch * p.M_critic * w * p.z / (g * cr * cr);
  }
  const double Mp = 6.0 * tau2 / (g * g * g) + stoch * p.M_critic * p.z * w / (cr * cr);
  if (regime == "harmonic") {
    const double e = w * g / 2.0;
    double out = B * std::pow((K + p.h) / (T + p.h), e);
    const double x = w * g;
    if (std::abs(x - 2.0) <= 1e-12)
      out += Mp * w * std::log(T + p.h) / (T + p.h);
    else if (x < 2.0)
      out += 8.0 * Mp * w / ((2.0 - x) * std::pow(T + p.h, e));
    else
      out += 8.0 * std::exp(1.0) * Mp * w / ((x - 2.0) * (T + p.h));
    return out;
  }
  const double one = 1.0 - p.eta;
  double out = B * std::exp(-w * g / (2.0 * one) * (std::pow(T + p.h, one) - std::pow(K + p.h, one)));
  double coef = unified ? 4.0 / g : 8.0;
  return out + coef * Mp / std::pow(T + p.h, p.eta);
}

BoundParams parse_bound_params(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "bound parameters must be a JSON object");
  reject_unknown(j, {"gamma", "omega0", "alpha0", "h", "eta", "tau0", "K", "z", "M_critic", "T", "constants", "regime"},
                 "");
  BoundParams p;
  p.gamma = field<double>(j, "gamma", "gamma");
  p.omega0 = field<double>(j, "omega0", "omega0");
  p.alpha0 = field<double>(j, "alpha0", "alpha0");
  if (j.contains("h")) p.h = field<double>(j, "h", "h");
  if (j.contains("eta")) p.eta = field<double>(j, "eta", "eta");
  if (j.contains("tau0")) p.tau0 = field<double>(j, "tau0", "tau0");
  if (j.contains("K")) p.K = field<std::int64_t>(j, "K", "K");
  if (j.contains("z")) p.z = field<double>(j, "z", "z");
  p.M_critic = field<double>(j, "M_critic", "M_critic");
  p.T = field<std::int64_t>(j, "T", "T");
  if (j.contains("constants")) p.constants = field<std::string>(j, "constants", "constants");
  if (j.contains("regime")) p.regime = field<std::string>(j, "regime", "regime");
  return p;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (auto [t, mse] : series) {
    if (t < t_lo || t > t_hi) continue;
    if (!(t > 0.0 && mse > 0.0))
      throw Error(ErrorKind::DegenerateWindow, "nonpositive value at T=" + std::to_string(t));
    pts.emplace_back(std::log(t), std::log(mse));
  }
  if (pts.size() < 5)
    throw Error(ErrorKind::DegenerateWindow, "need at least 5 points in the window, got " + std::to_string(pts.size()));
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::DegenerateWindow, "all points share one T");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double res = syy - f.slope * sxy;
  f.r2 = syy > 0.0 ? 1.0 - std::max(0.0, res) / syy : 1.0;
  f.points = static_cast<int>(pts.size());
  return f;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "omega0") return SweepAxis::omega0;
  if (name == "eta") return SweepAxis::eta;
  if (name == "critic") return SweepAxis::critic;
  if (name == "actor") return SweepAxis::actor;
  throw ValidationError("axis", "unknown sweep axis '" + name + "'");
}

SweepResult sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                  const SweepOptions& opts) {
  if (values.empty()) throw ValidationError("values", "sweep needs at least one value");
  static const char* names[] = {"omega0", "eta", "critic", "actor"};
  const std::string axis_name = names[static_cast<int>(axis)];

  std::vector<RunConfig> cfgs;
  for (const auto& v : values) {
    RunConfig cfg = base;
    try {
      switch (axis) {
        case SweepAxis::omega0: {
          double w = std::stod(v);
          if (opts.hold_ratio) cfg.schedule.alpha0 = base.schedule.alpha0 * w / base.schedule.omega0;
          cfg.schedule.omega0 = w;
          break;
        }
        case SweepAxis::eta:
          cfg.schedule.eta = std::stod(v);
          break;
        case SweepAxis::critic:
          cfg.critic = parse_critic(v);
          break;
        case SweepAxis::actor:
          cfg.actor = parse_actor(v);
          break;
      }
    } catch (const std::invalid_argument&) {
      throw ValidationError("values", "'" + v + "' is not a number");
    }
    cfg.name = base.name + "_" + axis_name + "=" + v;
    cfg.output_dir = (fs::path(base.output_dir) / (axis_name + "=" + v)).string();
    cfg.validate();
    cfgs.push_back(std::move(cfg));
  }

  SweepResult res;
  res.values = values;
  std::string csv = "axis,value,t,mse_mean,mse_std\n";
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    res.experiments.push_back(run_experiment(cfgs[i]));
    for (const auto& c : res.experiments.back().stats)
      csv += axis_name + ',' + values[i] + ',' + std::to_string(c.t) + ',' + format_double(c.mse_mean) + ',' +
             format_double(c.mse_std) + '\n';
  }
  fs::create_directories(base.output_dir);
  res.combined_csv = (fs::path(base.output_dir) / ("sweep_" + axis_name + ".csv")).string();
  write_file(res.combined_csv, csv);
  return res;
}

}  // namespace offac
