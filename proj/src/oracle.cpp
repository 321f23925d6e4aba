#include "offac/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "json.hpp"
#include "offac/graph.hpp"

namespace offac {

namespace {

double bellman_residual(const Mdp& mdp, const QTable& q) { return sup_norm(apply_bellman(mdp, q).v - q.v); }

Eigen::MatrixXd evaluation_matrix(const Mdp& mdp, const Policy& pi) {
  Eigen::MatrixXd A = -mdp.gamma * induced_kernels(mdp, pi).state_action;
  A.diagonal().array() += 1.0;
  return A;
}

}  // namespace

QTable solve_q_pi(const Mdp& mdp, const Policy& pi) {
  check_shape(mdp, pi, "solve_q_pi");
  Eigen::MatrixXd A = evaluation_matrix(mdp, pi);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  QTable q(mdp.n, mdp.m);
  q.v = lu.solve(mdp.r);
  Eigen::VectorXd res = A * q.v - mdp.r;
  if (sup_norm(res) > 1e-12) q.v -= lu.solve(res);
  if (!q.v.allFinite() || sup_norm(apply_bellman(mdp, q, pi).v - q.v) > 1e-10)
    throw Error(ErrorKind::SingularSystem, "policy evaluation residual too large");
  return q;
}

QStarResult solve_q_star(const Mdp& mdp, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  QStarResult out;
  QTable q(mdp.n, mdp.m, 0.0);
  const double stop = tol * (1.0 - mdp.gamma);
  double res = 0.0;
  for (;;) {
    QTable next = apply_bellman(mdp, q);
    res = sup_norm(next.v - q.v);
    q = std::move(next);
    ++out.sweeps;
    if (res <= stop) break;
  }
  res = bellman_residual(mdp, q);

  Policy pi = greedy_policy(q);
  for (int iter = 0; iter < 100; ++iter) {
    QTable qp = solve_q_pi(mdp, pi);
    Policy next = greedy_policy(qp);
    if ((next.v - pi.v).cwiseAbs().maxCoeff() == 0.0) {
      double rp = bellman_residual(mdp, qp);
      if (rp <= res) {
        q = qp;
        res = rp;
      }
      break;
    }
    pi = next;
  }
  out.q = q;
  out.policy = greedy_policy(q);
  out.residual = res;
  return out;
}

QTable optimality_gap(const Mdp& mdp, const QTable& q_star, const Policy& pi) {
  check_shape(mdp, q_star, "optimality_gap");
  check_shape(mdp, pi, "optimality_gap");
  Eigen::VectorXd g(mdp.n);
  for (int s = 0; s < mdp.n; ++s) {
    double v = q_star.row(s).maxCoeff();
    double acc = 0.0;
    for (int a = 0; a < mdp.m; ++a) acc += pi(s, a) * std::max(0.0, v - q_star(s, a));
    g[s] = acc;
  }
  Eigen::VectorXd rhs = mdp.gamma * (mdp.p * g);
  QTable out(mdp.n, mdp.m);
  out.v = evaluation_matrix(mdp, pi).partialPivLu().solve(rhs).cwiseMax(0.0);
  return out;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel, double tol) {
  const int n = static_cast<int>(kernel.rows());
  int comps = 0;
  strong_components(kernel, &comps);
  if (comps != 1) throw Error(ErrorKind::NotIrreducible, std::to_string(comps) + " communicating classes");
  Eigen::MatrixXd A = kernel.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd mu = lu.solve(b);
  mu -= lu.solve(A * mu - b);
  if (mu.minCoeff() <= 0.0) throw Error(ErrorKind::NotIrreducible, "non-positive stationary mass");
  mu /= mu.sum();
  double err = (kernel.transpose() * mu - mu).lpNorm<1>();
  if (err > tol) {
    // power refinement handles ill-conditioned LU solves
    for (int k = 0; k < 10000 && err > tol; ++k) {
      mu = kernel.transpose() * mu;
      mu /= mu.sum();
      err = (kernel.transpose() * mu - mu).lpNorm<1>();
    }
  }
  return mu;
}

Eigen::VectorXd behavior_distribution(const Mdp& mdp, const Policy& pi_b) {
  return stationary_distribution(induced_kernels(mdp, pi_b).state);
}

Eigen::VectorXd sampling_weights(const Mdp& mdp, const Policy& pi_b) {
  Eigen::VectorXd mu = behavior_distribution(mdp, pi_b);
  Eigen::VectorXd d(mdp.n * mdp.m);
  for (int s = 0; s < mdp.n; ++s)
    for (int a = 0; a < mdp.m; ++a) d[s * mdp.m + a] = mu[s] * pi_b(s, a);
  return d;
}

double target_contraction(const Mdp& mdp, const Policy& pi_b) {
  Eigen::VectorXd mu = behavior_distribution(mdp, pi_b);
  return std::sqrt(1.0 - (1.0 - mdp.gamma) * mu.minCoeff() * min_entry(pi_b));
}

Eigen::MatrixXd contraction_matrix(const Mdp& mdp, const Eigen::VectorXd& d, const std::vector<int>& actions) {
  const int nm = mdp.n * mdp.m;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nm, nm);
  M.diagonal() = Eigen::VectorXd::Ones(nm) - d;
  for (int i = 0; i < nm; ++i)
    for (int s2 = 0; s2 < mdp.n; ++s2) M(i, s2 * mdp.m + actions[s2]) += mdp.gamma * d[i] * mdp.p(i, s2);
  return M;
}

Eigen::MatrixXd contraction_matrix(const Mdp& mdp, const Eigen::VectorXd& d, const Policy& pi) {
  Eigen::MatrixXd M = mdp.gamma * (d.asDiagonal() * induced_kernels(mdp, pi).state_action);
  M.diagonal() += Eigen::VectorXd::Ones(mdp.n * mdp.m) - d;
  return M;
}

double weighted_operator_norm(const Eigen::MatrixXd& M, const Eigen::VectorXd& nu) {
  Eigen::VectorXd sq = nu.cwiseSqrt();
  Eigen::MatrixXd N = sq.asDiagonal() * M * sq.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N.transpose() * N, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

struct Candidate {
  double sigma;
  std::vector<int> actions;
};

class CertSearch {
 public:
  CertSearch(const Mdp& mdp, const Eigen::VectorXd& d, const CertifyOptions& opts)
      : mdp_(mdp), d_(d), opts_(opts), rng_(opts.seed) {
    double count = std::pow(static_cast<double>(mdp.m), mdp.n);
    exhaustive_ = count <= opts.exhaustive_limit;
  }

  bool exhaustive() const { return exhaustive_; }

  double norm(const std::vector<int>& act, const Eigen::VectorXd& nu) const {
    return weighted_operator_norm(contraction_matrix(mdp_, d_, act), nu);
  }

  // Worst policies under nu, best first.
  std::vector<Candidate> sweep(const Eigen::VectorXd& nu, std::size_t keep, double* worst_row_sum) {
    std::vector<Candidate> top;
    auto offer = [&](const std::vector<int>& act) {
      double sig = norm(act, nu);
      if (worst_row_sum) {
        Eigen::MatrixXd M = contraction_matrix(mdp_, d_, act);
        *worst_row_sum = std::max(*worst_row_sum, M.cwiseAbs().rowwise().sum().maxCoeff());
      }
      if (top.size() < keep || sig > top.back().sigma) {
        top.push_back({sig, act});
        std::sort(top.begin(), top.end(), [](const Candidate& a, const Candidate& b) { return a.sigma > b.sigma; });
        if (top.size() > keep) top.pop_back();
      }
      return sig;
    };
    const int n = mdp_.n, m = mdp_.m;
    if (exhaustive_) {
      std::vector<int> act(n, 0);
      for (;;) {
        offer(act);
        int k = 0;
        while (k < n && ++act[k] == m) act[k++] = 0;
        if (k == n) break;
      }
      return top;
    }
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int i = 0; i < opts_.sampled_policies; ++i) {
      std::vector<int> act(n);
      for (int& a : act) a = pick(rng_);
      offer(act);
    }
    // coordinate ascent from the sampled leaders
    auto seeds = top;
    for (auto cand : seeds) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int s = 0; s < n; ++s)
          for (int a = 0; a < m; ++a) {
            if (a == cand.actions[s]) continue;
            auto trial = cand.actions;
            trial[s] = a;
            double sig = offer(trial);
            if (sig > cand.sigma + 1e-15) {
              cand = {sig, trial};
              moved = true;
            }
          }
      }
    }
    return top;
  }

  // Gradient of sigma^2 with respect to log nu for one policy.
  Eigen::VectorXd log_gradient(const std::vector<int>& act, const Eigen::VectorXd& nu) const {
    Eigen::MatrixXd M = contraction_matrix(mdp_, d_, act);
    Eigen::VectorXd sq = nu.cwiseSqrt();
    Eigen::MatrixXd N = sq.asDiagonal() * M * sq.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N.transpose() * N);
    int top = 0;
    es.eigenvalues().maxCoeff(&top);
    double s2 = es.eigenvalues()[top];
    Eigen::VectorXd q = es.eigenvectors().col(top).cwiseQuotient(sq);
    Eigen::VectorXd mq = M * q;
    double denom = nu.dot(q.cwiseAbs2());
    return nu.cwiseProduct(mq.cwiseAbs2() - s2 * q.cwiseAbs2()) / denom;
  }

 private:
  const Mdp& mdp_;
  Eigen::VectorXd d_;
  CertifyOptions opts_;
  std::mt19937_64 rng_;
  bool exhaustive_ = true;
};

WeightCert search(const Mdp& mdp, const Policy& pi_b, const CertifyOptions& opts) {
  if (min_entry(pi_b) <= 0.0) throw Error(ErrorKind::NonPositiveBehavior, "behavior policy must be positive");
  const int nm = mdp.n * mdp.m;
  Eigen::VectorXd mu = behavior_distribution(mdp, pi_b);
  Eigen::VectorXd d = sampling_weights(mdp, pi_b);

  WeightCert cert;
  cert.target_factor = target_contraction(mdp, pi_b);
  cert.inf_norm_factor = 1.0 - (1.0 - mdp.gamma) * mu.minCoeff() * min_entry(pi_b);
  cert.nu_floor = (1.0 - mdp.gamma) * mu.minCoeff() * min_entry(pi_b) / nm;

  CertSearch cs(mdp, d, opts);
  cert.exhaustive = cs.exhaustive();
  const std::size_t keep = 8;

  std::vector<Eigen::VectorXd> starts = {Eigen::VectorXd::Constant(nm, 1.0 / nm), d / d.sum(),
                                         d.cwiseSqrt() / d.cwiseSqrt().sum()};
  Eigen::VectorXd best_nu;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Candidate> active;
  double worst_row = 0.0;
  for (const auto& nu : starts) {
    auto top = cs.sweep(nu, keep, &worst_row);
    if (top.front().sigma < best) {
      best = top.front().sigma;
      best_nu = nu;
      active = top;
    }
  }
  cert.row_sums_ok = worst_row <= cert.inf_norm_factor + 1e-12;

  auto active_max = [&](const Eigen::VectorXd& nu) {
    double worst = 0.0;
    for (const auto& c : active) worst = std::max(worst, cs.norm(c.actions, nu));
    return worst;
  };

  int rounds = 0;
  double step = 0.5;
  int since_sweep = 0;
  int stale = 0;
  Eigen::VectorXd nu = best_nu;
  double cur = best;
  while (rounds < opts.max_rounds && best > cert.target_factor && stale < 80) {
    ++rounds;
    // subgradient over the policies that are nearly binding
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(nm);
    int binding = 0;
    for (const auto& c : active) {
      double sig = cs.norm(c.actions, nu);
      if (sig >= cur - 1e-3) {
        grad += cs.log_gradient(c.actions, nu);
        ++binding;
      }
    }
    if (binding == 0 || grad.cwiseAbs().maxCoeff() == 0.0) break;
    grad /= grad.cwiseAbs().maxCoeff();
    Eigen::VectorXd trial = (nu.array().log() - step * grad.array()).exp();
    trial /= trial.sum();
    double val = active_max(trial);
    if (val < cur) {
      nu = trial;
      cur = val;
      step = std::min(step * 1.3, 2.0);
    } else {
      step *= 0.5;
    }
    if (++since_sweep >= 10 || step < 1e-6) {
      since_sweep = 0;
      auto top = cs.sweep(nu, keep, nullptr);
      double full = top.front().sigma;
      for (const auto& c : top) {
        bool seen = false;
        for (const auto& a : active) seen = seen || a.actions == c.actions;
        if (!seen) active.push_back(c);
      }
      if (full < best - 1e-12) {
        best = full;
        best_nu = nu;
        stale = 0;
      } else {
        stale += 10;
      }
      cur = full;
      if (step < 1e-6) step = 0.1;
    }
  }
  // final certificate is always a full sweep at the reported nu
  auto top = cs.sweep(best_nu, 1, nullptr);
  cert.nu = best_nu;
  cert.certified_factor = top.front().sigma;
  cert.rounds = rounds;
  cert.certified = cert.certified_factor <= cert.target_factor + 1e-9;
  return cert;
}

}  // namespace

WeightCert certify_weight_vector(const Mdp& mdp, const Policy& pi_b, const CertifyOptions& opts) {
  WeightCert cert = search(mdp, pi_b, opts);
  if (!(cert.certified_factor < 1.0))
    throw Error(ErrorKind::SearchFailed, "best weighted factor found " + std::to_string(cert.certified_factor));
  return cert;
}

WeightCert certify_or_fallback(const Mdp& mdp, const Policy& pi_b, const CertifyOptions& opts) {
  WeightCert cert = search(mdp, pi_b, opts);
  if (cert.certified_factor < 1.0) return cert;
  Eigen::VectorXd d = sampling_weights(mdp, pi_b);
  cert.nu = d / d.sum();
  cert.certified_factor = cert.inf_norm_factor;
  cert.certified = false;
  cert.fallback = true;
  return cert;
}

std::string cert_to_json(const WeightCert& cert) {
  nlohmann::json j;
  j["nu"] = std::vector<double>(cert.nu.data(), cert.nu.data() + cert.nu.size());
  j["certified_factor"] = cert.certified_factor;
  j["target_factor"] = cert.target_factor;
  j["certified"] = cert.certified;
  j["fallback"] = cert.fallback;
  j["inf_norm_factor"] = cert.inf_norm_factor;
  j["nu_floor"] = cert.nu_floor;
  j["exhaustive"] = cert.exhaustive;
  return j.dump();
}

}  // namespace offac
