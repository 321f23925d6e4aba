#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "offac/actor_critic.hpp"
#include "offac/oracle.hpp"

namespace offac {

// (I - D) Q + D H_pi Q
QTable fbar(const Mdp& mdp, const Eigen::VectorXd& d, const QTable& q, const Policy& pi);
// One-sample operators: only the (s1,a1) entry differs from Q.
QTable f_is(const Mdp& mdp, const QTable& q, const Transition& y, const Policy& pi, const Policy& pi_b);
QTable f_etd(const Mdp& mdp, const QTable& q, int s1, int a1, int s2, const Policy& pi);
// Exact averages of the one-sample operators under the stationary laws of
// (S,A,S',A') and (S,A,S').
QTable expected_f_is(const Mdp& mdp, const Policy& pi_b, const Eigen::VectorXd& mu_b, const QTable& q,
                     const Policy& pi);
QTable expected_f_etd(const Mdp& mdp, const Policy& pi_b, const Eigen::VectorXd& mu_b, const QTable& q,
                      const Policy& pi);

double weighted_inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& nu);

struct StepDecomposition {
  double T1 = 0.0;
  double T2 = 0.0;
  double T3 = 0.0;
  double T4 = 0.0;
  double sum() const { return T1 + T2 + T3 + T4; }
};

struct Snapshot {
  std::int64_t t = 0;
  int s = 0;
  int a = 0;
  double alpha = 0.0;
  double omega = 0.0;
  double tau = 0.0;
  double V = 0.0;      // ||Q* - Q^{pi_t}||^2
  double W = 0.0;      // 0.5 ||Q_t - Q^{pi_t}||_nu^2
  double xi = 0.0;     // ||Q_t - Q^{pi_t}||
  double chi = 0.0;    // ||H Q_t - H_{pi~_t} Q_t||
  double delta = 0.0;  // max (Q^{pi_t} - Q^{pi_{t+1}})
  double mse = 0.0;
  double gap = 0.0;       // ||Q* - Q^{pi_t}||
  double gap_next = 0.0;  // ||Q* - Q^{pi_{t+1}}||
  double V_next = 0.0;
  double W_next = 0.0;
  double target_shift = 0.0;  // ||Q^{pi_t} - Q^{pi_{t+1}}||
  double step_tv = 0.0;       // max_s TV(pi_t, pi_{t+1})
  // Against the previous snapshot of the same run (absent for the first one).
  bool has_window = false;
  std::int64_t window_from = 0;
  double window_tv = 0.0;
  double window_qpi_shift = 0.0;
  double window_omega_sum = 0.0;
  bool has_decomposition = false;
  StepDecomposition dec;
};

// Exact diagnostics for one run; keeps the previous snapshot's policy for the
// window quantities.
class Diagnostician {
 public:
  Diagnostician(const Mdp& mdp, const Policy& pi_b, const QTable& q_star, const WeightCert& cert,
                const Schedule& schedule, CriticRule critic);

  Snapshot measure(const StepContext& ctx);

  // Off by default; the T1..T4 terms need one extra operator evaluation.
  void set_decomposition(bool on) { with_decomposition_ = on; }
  const Eigen::VectorXd& sampling() const { return d_; }

 private:
  const Mdp& mdp_;
  const Policy& pi_b_;
  const QTable& q_star_;
  const WeightCert& cert_;
  Schedule schedule_;
  CriticRule critic_;
  Eigen::VectorXd d_;
  bool with_decomposition_ = false;
  bool have_prev_ = false;
  std::int64_t prev_t_ = 0;
  Policy prev_pi_;
  QTable prev_gap_;
  Policy cached_next_pi_;
  QTable cached_next_gap_;
};

Snapshot snapshot_metrics(const Mdp& mdp, const QTable& q_star, const RunState& state, const Policy& pi_tilde,
                          const Policy& pi_next, const WeightCert& cert);

StepDecomposition critic_step_decomposition(const Mdp& mdp, const Policy& pi_b, const RunState& state,
                                            const QTable& next_q, const Policy& pi_next, const Transition& y,
                                            const WeightCert& cert, double alpha_t, CriticRule critic);

enum class Verdict { pass, fail, informational };
const char* to_string(Verdict v);

struct InequalityVerdict {
  std::string name;
  std::string kind;  // pathwise | monte_carlo
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::int64_t first_violation_t = -1;
  Verdict status = Verdict::pass;
  std::string note;
  std::vector<std::int64_t> cell_t;
  std::vector<Verdict> cell_status;
};

struct VerdictReport {
  std::vector<InequalityVerdict> items;
  double certified_factor = 1.0;
  std::vector<double> nu;
  const InequalityVerdict* find(const std::string& name) const;
  bool all_pass() const;
  std::string to_json() const;
};

struct VerdictContext {
  double gamma = 0.5;
  double pi_b_min = 0.5;
  double nu_min = 0.25;
  double c_hat = 1.0;
  bool cert_valid = true;  // weighted-norm certificate found (not the sup-norm fallback)
  std::vector<double> nu;
  Schedule schedule;
  CriticRule critic = CriticRule::etd;
  std::int64_t K = 1;
  std::function<int(std::int64_t)> z_of;  // z_t
  double slack = 1e-9;
  bool record_cells = true;
};

enum class VerifyMode { pathwise, monte_carlo };

struct MonteCarloWindow {
  std::int64_t from = 0;
  std::int64_t to = 0;
};

// Pathwise mode checks every snapshot of every trace; Monte-Carlo mode averages
// snapshots sharing the same t across traces (needs at least 30 traces).
VerdictReport verify_inequalities(const std::vector<std::vector<Snapshot>>& traces, const VerdictContext& ctx,
                                  VerifyMode mode, MonteCarloWindow window = {});

// Whether the appendix stepsize conditions hold at step t.
bool stepsizes_conform(const VerdictContext& ctx, std::int64_t t);

struct PropertyReport {
  std::int64_t samples = 0;
  std::int64_t violations_contraction = 0;
  std::int64_t violations_is_lipschitz = 0;
  std::int64_t violations_etd_lipschitz = 0;
  std::int64_t violations_policy_shift = 0;
  std::int64_t violations_row_sum = 0;
  double worst_contraction_ratio = 0.0;
  std::int64_t total_violations() const {
    return violations_contraction + violations_is_lipschitz + violations_etd_lipschitz + violations_policy_shift +
           violations_row_sum;
  }
  std::string to_json() const;
};

PropertyReport operator_property_check(const Mdp& mdp, const Policy& pi_b, const WeightCert& cert,
                                       std::int64_t samples, std::uint64_t seed);

}  // namespace offac
