#include "offac/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace offac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int sample_index(const double* probs, int k, double u) {
  double cum = 0.0;
  int last = 0;
  for (int i = 0; i < k; ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = i;
    if (u < cum) return i;
  }
  return last;
}

}  // namespace

void Schedule::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("schedule.eta", "must lie in [0,1]");
  if (!(alpha0 > 0.0)) throw ValidationError("schedule.alpha0", "must be positive");
  if (!(omega0 > 0.0)) throw ValidationError("schedule.omega0", "must be positive");
  if (!(h > 0.0)) throw ValidationError("schedule.h", "must be positive");
  if (!(tau0 >= 0.0)) throw ValidationError("schedule.tau0", "must be nonnegative");
  if (!(ratio() > 0.0 && ratio() < 1.0)) throw ValidationError("schedule", "omega0/alpha0 must lie in (0,1)");
  if (omega0 / std::pow(h, eta) > 1.0) throw ValidationError("schedule.omega0", "omega_0 exceeds 1");
}

Stepsizes stepsize_at(const Schedule& schedule, std::int64_t t) {
  double denom = std::pow(static_cast<double>(t) + schedule.h, schedule.eta);
  return {schedule.alpha0 / denom, schedule.omega0 / denom};
}

double alpha_sum(const Schedule& schedule, std::int64_t from, std::int64_t to) {
  double acc = 0.0;
  for (std::int64_t u = std::max<std::int64_t>(from, 0); u <= to; ++u) acc += stepsize_at(schedule, u).alpha;
  return acc;
}

double omega_sum(const Schedule& schedule, std::int64_t from, std::int64_t to) {
  double acc = 0.0;
  for (std::int64_t u = std::max<std::int64_t>(from, 0); u <= to; ++u) acc += stepsize_at(schedule, u).omega;
  return acc;
}

double temperature_budget(const Schedule& schedule, std::int64_t t) {
  return schedule.tau0 * std::pow(static_cast<double>(t) + schedule.h, -schedule.eta / 2.0);
}

const char* to_string(ActorRule rule) {
  switch (rule) {
    case ActorRule::npg: return "npg";
    case ActorRule::softmax: return "softmax";
    case ActorRule::eps_greedy: return "eps_greedy";
  }
  return "?";
}

const char* to_string(CriticRule rule) {
  switch (rule) {
    case CriticRule::is: return "is";
    case CriticRule::etd: return "etd";
    case CriticRule::oracle: return "oracle";
  }
  return "?";
}

ActorRule parse_actor(const std::string& name) {
  if (name == "npg") return ActorRule::npg;
  if (name == "softmax") return ActorRule::softmax;
  if (name == "eps_greedy") return ActorRule::eps_greedy;
  throw ValidationError("actor", "unknown actor '" + name + "'");
}

CriticRule parse_critic(const std::string& name) {
  if (name == "is") return CriticRule::is;
  if (name == "etd") return CriticRule::etd;
  if (name == "oracle") return CriticRule::oracle;
  throw ValidationError("critic", "unknown critic '" + name + "'");
}

void actor_target_into(const Policy& pi, const QTable& q, double tau, ActorRule rule, Policy& out) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::InvalidTau, "temperature must be nonnegative");
  if (rule == ActorRule::eps_greedy && tau > 1.0)
    throw Error(ErrorKind::InvalidTau, "exploration level " + std::to_string(tau) + " exceeds 1");
  const int n = q.n, m = q.m;
  if (out.n != n || out.m != m) out = Policy(n, m);
  for (int s = 0; s < n; ++s) {
    const double* qs = q.v.data() + s * m;
    const double* ps = pi.v.data() + s * m;
    double* os = out.v.data() + s * m;
    int best = argmax_row(q, s);
    if (tau == 0.0) {
      for (int a = 0; a < m; ++a) os[a] = a == best ? 1.0 : 0.0;
      continue;
    }
    double qmax = qs[best];
    switch (rule) {
      case ActorRule::eps_greedy:
        for (int a = 0; a < m; ++a) os[a] = tau / m;
        os[best] += 1.0 - tau;
        break;
      case ActorRule::softmax: {
        double z = 0.0;
        for (int a = 0; a < m; ++a) z += os[a] = std::exp((qs[a] - qmax) / tau);
        for (int a = 0; a < m; ++a) os[a] /= z;
        break;
      }
      case ActorRule::npg: {
        double top = -kInf;
        for (int a = 0; a < m; ++a) {
          os[a] = ps[a] > 0.0 ? std::log(ps[a]) + (qs[a] - qmax) / tau : -kInf;
          top = std::max(top, os[a]);
        }
        if (top == -kInf) throw Error(ErrorKind::InvalidArgument, "policy row without support");
        double z = 0.0;
        for (int a = 0; a < m; ++a) z += os[a] = ps[a] > 0.0 ? std::exp(os[a] - top) : 0.0;
        for (int a = 0; a < m; ++a) os[a] /= z;
        break;
      }
    }
  }
}

Policy actor_target(const Policy& pi, const QTable& q, double tau, ActorRule rule) {
  check_same_shape(pi, q, "actor_target");
  Policy out(q.n, q.m);
  actor_target_into(pi, q, tau, rule, out);
  return out;
}

double temperature_cap(const Schedule& schedule, std::int64_t t, ActorRule rule, const Policy& pi_t,
                       const QTable& q_t, double gamma) {
  double budget = temperature_budget(schedule, t);
  if (budget == 0.0) return 0.0;
  const int m = q_t.m;
  double softmax_cap = m > 1 ? budget / std::log(static_cast<double>(m)) : kInf;
  switch (rule) {
    case ActorRule::softmax:
      return softmax_cap;
    case ActorRule::npg: {
      double worst = 1.0;
      for (int s = 0; s < pi_t.n; ++s) worst = std::min(worst, pi_t.row(s).maxCoeff());
      double denom = -std::log(worst);
      return denom > 0.0 ? budget / denom : softmax_cap;
    }
    case ActorRule::eps_greedy: {
      double qn = sup_norm(q_t.v);
      double cap = qn > 0.0 ? budget / (2.0 * gamma * qn) : kInf;
      return std::clamp(cap, 0.0, 1.0);
    }
  }
  return 0.0;
}

double applied_temperature(const Schedule& schedule, std::int64_t t, ActorRule rule, const Policy& pi_t,
                           const QTable& q_t, double gamma) {
  double cap = temperature_cap(schedule, t, rule, pi_t, q_t, gamma);
  if (rule != ActorRule::npg || cap == 0.0) return cap;
  double worst = 1.0;
  for (int s = 0; s < q_t.n; ++s) {
    double qmax = q_t.row(s).maxCoeff();
    double mass = 0.0;
    for (int a = 0; a < q_t.m; ++a)
      if (q_t(s, a) == qmax) mass = std::max(mass, pi_t(s, a));
    worst = std::min(worst, mass);
  }
  if (worst <= 0.0) return 0.0;
  double denom = -std::log(worst);
  return denom > 0.0 ? std::min(cap, temperature_budget(schedule, t) / denom) : cap;
}

double cr_threshold(const Mdp& mdp, const WeightCert& cert, CriticRule critic) {
  if (critic == CriticRule::oracle) return kInf;
  double gap = 1.0 - cert.certified_factor;
  if (gap <= 0.0) return 0.0;
  double divisor = critic == CriticRule::is ? 20.0 : 16.0;
  return std::pow(1.0 - mdp.gamma, 3) * gap * cert.nu_min() / divisor;
}

double td_delta(const Mdp& mdp, const QTable& q, const Policy& pi_next, const Policy& pi_b, const Transition& y,
                CriticRule critic) {
  double target = 0.0;
  switch (critic) {
    case CriticRule::is: {
      double b = pi_b(y.s2, y.a2);
      if (b <= 0.0) throw Error(ErrorKind::ZeroBehaviorProb, "behavior probability of sampled action is zero");
      target = pi_next(y.s2, y.a2) / b * q(y.s2, y.a2);
      break;
    }
    case CriticRule::etd:
      target = expected_value(q, pi_next, y.s2);
      break;
    case CriticRule::oracle:
      throw Error(ErrorKind::InvalidArgument, "oracle critic has no temporal difference");
  }
  return mdp.reward(y.s, y.a) + mdp.gamma * target - q(y.s, y.a);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter, std::uint32_t draw) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ counter);
  x = splitmix64(x + draw);
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

RunState run(const Mdp& mdp, const Policy& pi_b, const Schedule& schedule, ActorRule actor, CriticRule critic,
             const RunOptions& options, RunStats* stats) {
  check_shape(mdp, pi_b, "run: behavior policy");
  if (min_entry(pi_b) <= 0.0) throw Error(ErrorKind::NonPositiveBehavior, "behavior policy must be positive");
  const int n = mdp.n, m = mdp.m;

  RunState st;
  st.seed = options.seed;
  st.pi = options.pi0 ? *options.pi0 : Policy::uniform(n, m);
  check_shape(mdp, st.pi, "run: initial policy");
  st.q = critic == CriticRule::oracle ? solve_q_pi(mdp, st.pi) : QTable(n, m, 0.0);
  st.s = std::min(n - 1, static_cast<int>(counter_uniform(st.seed, 0, 0) * n));
  st.a = sample_index(pi_b.v.data() + st.s * m, m, counter_uniform(st.seed, 0, 1));
  if (stats) *stats = {st.q.v.minCoeff(), st.q.v.maxCoeff()};

  Policy pi_tilde(n, m), pi_next(n, m);
  QTable q_next(n, m);
  for (std::int64_t t = 0; t <= options.horizon; ++t) {
    bool look = options.observer && options.observer->wants(t);
    if (t == options.horizon && !look) break;

    Stepsizes step = stepsize_at(schedule, t);
    double tau = applied_temperature(schedule, t, actor, st.pi, st.q, mdp.gamma);
    actor_target_into(st.pi, st.q, tau, actor, pi_tilde);
    pi_next.v = (1.0 - step.omega) * st.pi.v + step.omega * pi_tilde.v;

    Transition y{st.s, st.a, 0, 0};
    {
      // p is column-major, so gather the row before sampling
      const std::uint64_t c = static_cast<std::uint64_t>(t) + 1;
      double u = counter_uniform(st.seed, c, 0);
      double cum = 0.0;
      int row = y.s * m + y.a;
      int last = 0;
      y.s2 = -1;
      for (int s2 = 0; s2 < n; ++s2) {
        double p = mdp.p(row, s2);
        if (p <= 0.0) continue;
        cum += p;
        last = s2;
        if (u < cum) {
          y.s2 = s2;
          break;
        }
      }
      if (y.s2 < 0) y.s2 = last;
      y.a2 = sample_index(pi_b.v.data() + y.s2 * m, m, counter_uniform(st.seed, c, 1));
    }

    if (critic == CriticRule::oracle) {
      q_next = solve_q_pi(mdp, pi_next);
    } else {
      q_next.v = st.q.v;
      double delta = td_delta(mdp, st.q, pi_next, pi_b, y, critic);
      double& entry = q_next(y.s, y.a);
      entry += step.alpha * delta;
      if (stats) {
        stats->q_min = std::min(stats->q_min, entry);
        stats->q_max = std::max(stats->q_max, entry);
      }
    }

    if (look) options.observer->observe(StepContext{st, pi_tilde, pi_next, q_next, y, step.alpha, step.omega, tau});
    if (t == options.horizon) break;

    st.t = t + 1;
    std::swap(st.pi, pi_next);
    std::swap(st.q, q_next);
    st.s = y.s2;
    st.a = y.a2;
  }
  return st;
}

}  // namespace offac
