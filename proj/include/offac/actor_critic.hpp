#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "offac/mdp.hpp"
#include "offac/oracle.hpp"

namespace offac {

struct Schedule {
  double eta = 0.0;
  double alpha0 = 0.1;
  double omega0 = 0.01;
  double h = 1.0;
  double tau0 = 0.0;

  double ratio() const { return omega0 / alpha0; }  // C_r
  void validate() const;
};

struct Stepsizes {
  double alpha;
  double omega;
};

Stepsizes stepsize_at(const Schedule& schedule, std::int64_t t);
// sum_{u=from}^{to} alpha_u (zero when from > to; negative indices are clipped to 0)
double alpha_sum(const Schedule& schedule, std::int64_t from, std::int64_t to);
double omega_sum(const Schedule& schedule, std::int64_t from, std::int64_t to);
// tau0 (t+h)^{-eta/2}
double temperature_budget(const Schedule& schedule, std::int64_t t);

enum class ActorRule { npg, softmax, eps_greedy };
enum class CriticRule { is, etd, oracle };

const char* to_string(ActorRule rule);
const char* to_string(CriticRule rule);
ActorRule parse_actor(const std::string& name);
CriticRule parse_critic(const std::string& name);

Policy actor_target(const Policy& pi, const QTable& q, double tau, ActorRule rule);
void actor_target_into(const Policy& pi, const QTable& q, double tau, ActorRule rule, Policy& out);

// Largest temperature the schedule allows at step t for the given rule.
double temperature_cap(const Schedule& schedule, std::int64_t t, ActorRule rule, const Policy& pi_t,
                       const QTable& q_t, double gamma);

// Temperature actually used by run(): the cap, further limited for npg by
// tau0 (t+h)^{-eta/2} / log(1/min_s pi_t(a*_s|s)) with a*_s the Q-argmax, which
// is what bounds H Q - H_{G(pi,Q,tau)} Q.
double applied_temperature(const Schedule& schedule, std::int64_t t, ActorRule rule, const Policy& pi_t,
                           const QTable& q_t, double gamma);

// Largest C_r allowed by the appendix stepsize condition; +inf for the oracle critic.
double cr_threshold(const Mdp& mdp, const WeightCert& cert, CriticRule critic);

struct Transition {
  int s = 0;
  int a = 0;
  int s2 = 0;
  int a2 = 0;
};

double td_delta(const Mdp& mdp, const QTable& q, const Policy& pi_next, const Policy& pi_b, const Transition& y,
                CriticRule critic);

// Counter-based uniforms: the value depends only on (seed, counter, draw).
double counter_uniform(std::uint64_t seed, std::uint64_t counter, std::uint32_t draw);

struct RunState {
  std::int64_t t = 0;
  Policy pi;
  QTable q;
  int s = 0;
  int a = 0;
  std::uint64_t seed = 0;  // generator key; draws at step t use counter t
};

// Everything known about step t: the state before the step, the actor target,
// the mixed policy, the updated critic and the sampled transition.
struct StepContext {
  const RunState& state;
  const Policy& pi_tilde;
  const Policy& pi_next;
  const QTable& q_next;
  Transition y;
  double alpha;
  double omega;
  double tau;
};

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  // Steps for which observe() is called. Step T (the horizon) is a look-ahead
  // step: it is observed but not applied to the returned state.
  virtual bool wants(std::int64_t t) const = 0;
  virtual void observe(const StepContext& ctx) = 0;
};

struct RunOptions {
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  StepObserver* observer = nullptr;
  std::optional<Policy> pi0;
};

struct RunStats {
  double q_min = 0.0;
  double q_max = 0.0;
};

RunState run(const Mdp& mdp, const Policy& pi_b, const Schedule& schedule, ActorRule actor, CriticRule critic,
             const RunOptions& options, RunStats* stats = nullptr);

}  // namespace offac
