#include "offac/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace offac {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonStochasticRow: return "NonStochasticRow";
    case ErrorKind::RewardOutOfRange: return "RewardOutOfRange";
    case ErrorKind::BadDiscount: return "BadDiscount";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::SearchFailed: return "SearchFailed";
    case ErrorKind::InvalidLambda: return "InvalidLambda";
    case ErrorKind::NoMixing: return "NoMixing";
    case ErrorKind::InvalidTau: return "InvalidTau";
    case ErrorKind::ZeroBehaviorProb: return "ZeroBehaviorProb";
    case ErrorKind::NonPositiveBehavior: return "NonPositiveBehavior";
    case ErrorKind::InsufficientRuns: return "InsufficientRuns";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::RegimeMismatch: return "RegimeMismatch";
    case ErrorKind::DegenerateWindow: return "DegenerateWindow";
    case ErrorKind::NotExplorable: return "NotExplorable";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

constexpr double kRowTol = 1e-12;
constexpr double kRenormTol = 1e-9;

}  // namespace

Policy Policy::uniform(int n, int m) { return Policy(n, m, 1.0 / m); }

Policy Policy::deterministic(int n, int m, const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != n)
    throw Error(ErrorKind::DimensionMismatch, "one action per state expected");
  Policy pi(n, m, 0.0);
  for (int s = 0; s < n; ++s) pi(s, actions[s]) = 1.0;
  return pi;
}

Mdp validate_mdp(const RawMdp& raw) {
  if (raw.n < 1 || raw.m < 1) throw Error(ErrorKind::DimensionMismatch, "n and m must be >= 1");
  if (static_cast<int>(raw.p.size()) != raw.n || static_cast<int>(raw.r.size()) != raw.n)
    throw Error(ErrorKind::DimensionMismatch, "p and r need n rows");
  if (!(raw.gamma > 0.0 && raw.gamma < 1.0))
    throw Error(ErrorKind::BadDiscount, "gamma=" + std::to_string(raw.gamma) + " not in (0,1)");

  Mdp mdp;
  mdp.n = raw.n;
  mdp.m = raw.m;
  mdp.gamma = raw.gamma;
  mdp.p.resize(raw.n * raw.m, raw.n);
  mdp.r.resize(raw.n * raw.m);
  for (int s = 0; s < raw.n; ++s) {
    if (static_cast<int>(raw.p[s].size()) != raw.m || static_cast<int>(raw.r[s].size()) != raw.m)
      throw Error(ErrorKind::DimensionMismatch, "state " + std::to_string(s) + " needs m actions");
    for (int a = 0; a < raw.m; ++a) {
      const auto& row = raw.p[s][a];
      if (static_cast<int>(row.size()) != raw.n)
        throw Error(ErrorKind::DimensionMismatch, "p row needs n entries");
      double sum = 0.0;
      for (double x : row) {
        if (!std::isfinite(x) || x < 0.0)
          throw Error(ErrorKind::NonStochasticRow,
                      "negative or non-finite entry in p[" + std::to_string(s) + "][" + std::to_string(a) + "]");
        sum += x;
      }
      double dev = std::abs(sum - 1.0);
      if (dev > kRenormTol)
        throw Error(ErrorKind::NonStochasticRow, "p[" + std::to_string(s) + "][" + std::to_string(a) +
                                                     "] sums to " + std::to_string(sum));
      for (int s2 = 0; s2 < raw.n; ++s2) mdp.p(s * raw.m + a, s2) = dev > kRowTol ? row[s2] / sum : row[s2];

      double rew = raw.r[s][a];
      if (!std::isfinite(rew) || rew < 0.0 || rew > 1.0)
        throw Error(ErrorKind::RewardOutOfRange,
                    "r[" + std::to_string(s) + "][" + std::to_string(a) + "]=" + std::to_string(rew));
      mdp.r[s * raw.m + a] = rew;
    }
  }
  return mdp;
}

RawMdp to_raw(const Mdp& mdp) {
  RawMdp raw;
  raw.n = mdp.n;
  raw.m = mdp.m;
  raw.gamma = mdp.gamma;
  raw.p.assign(mdp.n, std::vector<std::vector<double>>(mdp.m, std::vector<double>(mdp.n)));
  raw.r.assign(mdp.n, std::vector<double>(mdp.m));
  for (int s = 0; s < mdp.n; ++s)
    for (int a = 0; a < mdp.m; ++a) {
      for (int s2 = 0; s2 < mdp.n; ++s2) raw.p[s][a][s2] = mdp.prob(s, a, s2);
      raw.r[s][a] = mdp.reward(s, a);
    }
  return raw;
}

Mdp parse_mdp(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  RawMdp raw;
  try {
    for (const auto& [key, _] : j.items())
      if (key != "n" && key != "m" && key != "gamma" && key != "p" && key != "r")
        throw Error(ErrorKind::ParseError, "unknown key '" + key + "' in MDP file");
    raw.n = j.at("n").get<int>();
    raw.m = j.at("m").get<int>();
    raw.gamma = j.at("gamma").get<double>();
    raw.p = j.at("p").get<std::vector<std::vector<std::vector<double>>>>();
    raw.r = j.at("r").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return validate_mdp(raw);
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mdp(ss.str());
}

std::string serialize_mdp(const Mdp& mdp) {
  RawMdp raw = to_raw(mdp);
  nlohmann::json j;
  j["n"] = raw.n;
  j["m"] = raw.m;
  j["gamma"] = raw.gamma;
  j["p"] = raw.p;
  j["r"] = raw.r;
  return j.dump();
}

void save_mdp(const Mdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << serialize_mdp(mdp) << "\n";
}

void check_same_shape(const Table& a, const Table& b, const char* what) {
  if (a.n != b.n || a.m != b.m) throw Error(ErrorKind::DimensionMismatch, what);
}

void check_shape(const Mdp& mdp, const Table& t, const char* what) {
  if (t.n != mdp.n || t.m != mdp.m) throw Error(ErrorKind::DimensionMismatch, what);
}

double expected_value(const QTable& q, const Policy& pi, int s) {
  auto qr = q.row(s);
  double e = pi.row(s).dot(qr);
  return std::clamp(e, qr.minCoeff(), qr.maxCoeff());
}

Eigen::VectorXd expected_values(const QTable& q, const Policy& pi) {
  Eigen::VectorXd out(q.n);
  for (int s = 0; s < q.n; ++s) out[s] = expected_value(q, pi, s);
  return out;
}

Eigen::VectorXd max_values(const QTable& q) {
  Eigen::VectorXd out(q.n);
  for (int s = 0; s < q.n; ++s) out[s] = q.row(s).maxCoeff();
  return out;
}

QTable apply_bellman(const Mdp& mdp, const QTable& q, const Policy& pi) {
  check_shape(mdp, q, "apply_bellman: Q shape");
  check_shape(mdp, pi, "apply_bellman: policy shape");
  QTable out(mdp.n, mdp.m);
  out.v = mdp.r + mdp.gamma * (mdp.p * expected_values(q, pi));
  return out;
}

QTable apply_bellman(const Mdp& mdp, const QTable& q) {
  check_shape(mdp, q, "apply_bellman: Q shape");
  QTable out(mdp.n, mdp.m);
  out.v = mdp.r + mdp.gamma * (mdp.p * max_values(q));
  return out;
}

Policy mix_policies(const Policy& p1, const Policy& p2, double alpha) {
  check_same_shape(p1, p2, "mix_policies");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::InvalidAlpha, "alpha=" + std::to_string(alpha) + " outside [0,1]");
  Policy out(p1.n, p1.m);
  out.v = (1.0 - alpha) * p1.v + alpha * p2.v;
  return out;
}

InducedKernels induced_kernels(const Mdp& mdp, const Policy& pi) {
  check_shape(mdp, pi, "induced_kernels");
  const int n = mdp.n, m = mdp.m;
  InducedKernels k;
  k.state = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) k.state.row(s) += pi(s, a) * mdp.p.row(s * m + a);
  k.state_action.resize(n * m, n * m);
  for (int i = 0; i < n * m; ++i)
    for (int s2 = 0; s2 < n; ++s2)
      for (int a2 = 0; a2 < m; ++a2) k.state_action(i, s2 * m + a2) = mdp.p(i, s2) * pi(s2, a2);
  return k;
}

int argmax_row(const Table& t, int s) {
  int best = 0;
  for (int a = 1; a < t.m; ++a)
    if (t(s, a) > t(s, best)) best = a;
  return best;
}

Policy greedy_policy(const QTable& q) {
  Policy pi(q.n, q.m, 0.0);
  for (int s = 0; s < q.n; ++s) pi(s, argmax_row(q, s)) = 1.0;
  return pi;
}

double sup_norm(const Eigen::VectorXd& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

double max_tv(const Policy& a, const Policy& b) {
  check_same_shape(a, b, "max_tv");
  double worst = 0.0;
  for (int s = 0; s < a.n; ++s) worst = std::max(worst, 0.5 * (a.row(s) - b.row(s)).cwiseAbs().sum());
  return worst;
}

double min_entry(const Policy& pi) { return pi.v.minCoeff(); }

Mdp chain2() {
  RawMdp raw;
  raw.n = 2;
  raw.m = 2;
  raw.gamma = 0.5;
  raw.p = {{{1.0, 0.0}, {0.0, 1.0}}, {{0.0, 1.0}, {1.0, 0.0}}};
  raw.r = {{0.0, 0.0}, {1.0, 1.0}};
  return validate_mdp(raw);
}

Policy random_policy(int n, int m, std::mt19937_64& rng, bool strictly_positive) {
  std::exponential_distribution<double> expo(1.0);
  Policy pi(n, m);
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int a = 0; a < m; ++a) {
      double w = expo(rng);
      if (strictly_positive) w += 0.05;
      pi(s, a) = w;
      sum += w;
    }
    pi.row(s) /= sum;
  }
  return pi;
}

QTable random_q(int n, int m, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  QTable q(n, m);
  for (int i = 0; i < q.size(); ++i) q.v[i] = u(rng);
  return q;
}

Mdp random_mdp(int n, int m, double gamma, std::mt19937_64& rng, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick_action(0, m - 1);
  RawMdp raw;
  raw.n = n;
  raw.m = m;
  raw.gamma = gamma;
  raw.p.assign(n, std::vector<std::vector<double>>(m, std::vector<double>(n, 0.0)));
  raw.r.assign(n, std::vector<double>(m, 0.0));
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) {
      for (int s2 = 0; s2 < n; ++s2)
        if (u(rng) < density) raw.p[s][a][s2] = u(rng);
      raw.r[s][a] = u(rng);
    }
  // A ring through some action keeps the state graph strongly connected, and a
  // self-loop at state 0 keeps the behavior chain aperiodic.
  for (int s = 0; s < n; ++s) raw.p[s][pick_action(rng)][(s + 1) % n] += 0.1 + u(rng);
  raw.p[0][pick_action(rng)][0] += 0.1 + u(rng);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) {
      auto& row = raw.p[s][a];
      double sum = 0.0;
      for (double x : row) sum += x;
      if (sum == 0.0) {
        row[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1.0;
        continue;
      }
      for (double& x : row) x /= sum;
    }
  return validate_mdp(raw);
}

}  // namespace offac
