#pragma once

#include <string>
#include <vector>

#include "offac/mdp.hpp"

namespace offac {

struct QStarResult {
  QTable q;
  Policy policy;
  double residual = 0.0;  // ||HQ - Q||_inf
  int sweeps = 0;
};

// Value iteration to ||HQ - Q|| <= tol(1-gamma), then polished by exact
// evaluation of the greedy policy whenever that lowers the residual.
QStarResult solve_q_star(const Mdp& mdp, double tol = 1e-12);

// Solves (I - gamma P_hat_pi) Q = R by LU.
QTable solve_q_pi(const Mdp& mdp, const Policy& pi);

// Q* - Q^pi through the advantage form (I - gamma P_hat_pi)^{-1} gamma P g,
// g(s) = sum_a pi(a|s)(V*(s) - Q*(s,a)). Keeps relative accuracy when pi is
// nearly optimal, where subtracting two solved tables would only give roundoff.
QTable optimality_gap(const Mdp& mdp, const QTable& q_star, const Policy& pi);

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel, double tol = 1e-12);

// mu_b for the chain induced by the behavior policy.
Eigen::VectorXd behavior_distribution(const Mdp& mdp, const Policy& pi_b);

// diag(D) with D((s,a)) = mu_b(s) pi_b(a|s)
Eigen::VectorXd sampling_weights(const Mdp& mdp, const Policy& pi_b);

struct WeightCert {
  Eigen::VectorXd nu;
  double certified_factor = 1.0;
  double target_factor = 1.0;
  bool certified = false;
  // Set when no weighted-norm certificate with factor < 1 was found and the
  // sup-norm row-sum factor is reported instead.
  bool fallback = false;
  double inf_norm_factor = 1.0;
  bool row_sums_ok = false;
  double nu_floor = 0.0;
  int rounds = 0;
  bool exhaustive = true;  // every deterministic policy was evaluated

  double nu_min() const { return nu.minCoeff(); }
};

struct CertifyOptions {
  int max_rounds = 500;
  int exhaustive_limit = 4096;
  int sampled_policies = 2048;
  unsigned seed = 1;
};

// M_pi = (I - D) + gamma D P_hat_pi for a deterministic policy.
Eigen::MatrixXd contraction_matrix(const Mdp& mdp, const Eigen::VectorXd& d, const std::vector<int>& actions);
Eigen::MatrixXd contraction_matrix(const Mdp& mdp, const Eigen::VectorXd& d, const Policy& pi);

// ||M||_nu operator norm.
double weighted_operator_norm(const Eigen::MatrixXd& M, const Eigen::VectorXd& nu);

// Throws SearchFailed when no factor below 1 is found.
WeightCert certify_weight_vector(const Mdp& mdp, const Policy& pi_b, const CertifyOptions& opts = {});

// Same search, but returns the sup-norm fallback instead of throwing.
WeightCert certify_or_fallback(const Mdp& mdp, const Policy& pi_b, const CertifyOptions& opts = {});

std::string cert_to_json(const WeightCert& cert);

// sqrt(1 - (1-gamma) mu_min pi_min)
double target_contraction(const Mdp& mdp, const Policy& pi_b);

}  // namespace offac
