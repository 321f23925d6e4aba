#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "offac/errors.hpp"

namespace offac {

// Dense n x m table stored as a flat vector indexed by s*m + a.
struct Table {
  int n = 0;
  int m = 0;
  Eigen::VectorXd v;

  Table() = default;
  Table(int n_, int m_, double fill = 0.0) : n(n_), m(m_), v(Eigen::VectorXd::Constant(n_ * m_, fill)) {}

  double operator()(int s, int a) const { return v[s * m + a]; }
  double& operator()(int s, int a) { return v[s * m + a]; }
  auto row(int s) const { return v.segment(s * m, m); }
  auto row(int s) { return v.segment(s * m, m); }
  int size() const { return n * m; }
};

struct QTable : Table {
  using Table::Table;
};

struct Policy : Table {
  using Table::Table;
  static Policy uniform(int n, int m);
  static Policy deterministic(int n, int m, const std::vector<int>& actions);
};

struct Mdp {
  int n = 0;
  int m = 0;
  double gamma = 0.0;
  Eigen::MatrixXd p;  // (n*m) x n, row s*m + a holds p(.|s,a)
  Eigen::VectorXd r;  // n*m

  double prob(int s, int a, int s2) const { return p(s * m + a, s2); }
  double reward(int s, int a) const { return r[s * m + a]; }
};

// Unvalidated MDP data as read from a file.
struct RawMdp {
  int n = 0;
  int m = 0;
  double gamma = 0.0;
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<std::vector<double>> r;
};

Mdp validate_mdp(const RawMdp& raw);
RawMdp to_raw(const Mdp& mdp);

Mdp load_mdp(const std::string& path);
void save_mdp(const Mdp& mdp, const std::string& path);
Mdp parse_mdp(const std::string& text);
std::string serialize_mdp(const Mdp& mdp);

// H_pi Q
QTable apply_bellman(const Mdp& mdp, const QTable& q, const Policy& pi);
// H Q
QTable apply_bellman(const Mdp& mdp, const QTable& q);

Policy mix_policies(const Policy& p1, const Policy& p2, double alpha);

struct InducedKernels {
  Eigen::MatrixXd state;         // n x n
  Eigen::MatrixXd state_action;  // nm x nm
};
InducedKernels induced_kernels(const Mdp& mdp, const Policy& pi);

Policy greedy_policy(const QTable& q);
int argmax_row(const Table& t, int s);

// sum_a pi(a|s) Q(s,a), kept inside [min_a Q(s,a), max_a Q(s,a)] against row-sum rounding.
double expected_value(const QTable& q, const Policy& pi, int s);
Eigen::VectorXd expected_values(const QTable& q, const Policy& pi);
Eigen::VectorXd max_values(const QTable& q);

double sup_norm(const Eigen::VectorXd& x);
// max_s total variation between the rows of two policies
double max_tv(const Policy& a, const Policy& b);
double min_entry(const Policy& pi);

void check_same_shape(const Table& a, const Table& b, const char* what);
void check_shape(const Mdp& mdp, const Table& t, const char* what);

// Two states, stay (0) / switch (1), reward 1 in state 1, gamma 0.5.
Mdp chain2();

Policy random_policy(int n, int m, std::mt19937_64& rng, bool strictly_positive = false);
QTable random_q(int n, int m, double lo, double hi, std::mt19937_64& rng);
// Random MDP whose state graph is strongly connected; `density` is the chance a
// successor gets positive mass in each row.
Mdp random_mdp(int n, int m, double gamma, std::mt19937_64& rng, double density = 0.6);

}  // namespace offac
