#include "offac/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <json.hpp>

namespace offac {

namespace {

using Vec = Eigen::VectorXd;

// gamma * max_{s,a} sum_s' p(s'|s,a) (max_a' Q(s',a') - sum_a' pi(a'|s') Q(s',a'))
double temperature_error(const Mdp& mdp, const QTable& q, const Policy& pi) {
  Vec g(mdp.n);
  for (int s = 0; s < mdp.n; ++s) g[s] = std::max(0.0, q.row(s).maxCoeff() - expected_value(q, pi, s));
  return mdp.gamma * std::max(0.0, (mdp.p * g).maxCoeff());
}

double half_sq(const Vec& x, const Vec& nu) { return 0.5 * nu.dot(x.cwiseProduct(x)); }

double nu_norm(const Vec& x, const Vec& nu) { return std::sqrt(nu.dot(x.cwiseProduct(x))); }

StepDecomposition decompose(const Mdp& mdp, const Vec& d, const Vec& nu, const QTable& q, const QTable& q_pi,
                            const QTable& q_pi_next, const QTable& next_q, const Policy& pi, const Policy& pi_next,
                            const Policy& pi_b, const Transition& y, double alpha, CriticRule critic) {
  Vec e = q.v - q_pi.v;
  QTable fb = fbar(mdp, d, q, pi);
  QTable fs = critic == CriticRule::is ? f_is(mdp, q, y, pi_next, pi_b) : f_etd(mdp, q, y.s, y.a, y.s2, pi_next);
  Vec shift = q_pi.v - q_pi_next.v;
  StepDecomposition out;
  out.T1 = alpha * weighted_inner(e, fb.v - q.v, nu);
  out.T2 = alpha * weighted_inner(e, fs.v - fb.v, nu);
  out.T3 = weighted_inner(e, shift, nu);
  out.T4 = half_sq((next_q.v - q.v) + shift, nu);
  return out;
}

}  // namespace

QTable fbar(const Mdp& mdp, const Vec& d, const QTable& q, const Policy& pi) {
  check_shape(mdp, q, "fbar: Q");
  QTable h = apply_bellman(mdp, q, pi);
  QTable out(mdp.n, mdp.m);
  out.v = q.v + d.cwiseProduct(h.v - q.v);
  return out;
}

QTable f_is(const Mdp& mdp, const QTable& q, const Transition& y, const Policy& pi, const Policy& pi_b) {
  double b = pi_b(y.s2, y.a2);
  if (b <= 0.0) throw Error(ErrorKind::ZeroBehaviorProb, "behavior probability of sampled action is zero");
  QTable out = q;
  out(y.s, y.a) = mdp.reward(y.s, y.a) + mdp.gamma * pi(y.s2, y.a2) / b * q(y.s2, y.a2);
  return out;
}

QTable f_etd(const Mdp& mdp, const QTable& q, int s1, int a1, int s2, const Policy& pi) {
  QTable out = q;
  out(s1, a1) = mdp.reward(s1, a1) + mdp.gamma * expected_value(q, pi, s2);
  return out;
}

QTable expected_f_is(const Mdp& mdp, const Policy& pi_b, const Vec& mu_b, const QTable& q, const Policy& pi) {
  const int n = mdp.n, m = mdp.m;
  QTable out(n, m, 0.0);
  for (int s1 = 0; s1 < n; ++s1)
    for (int a1 = 0; a1 < m; ++a1)
      for (int s2 = 0; s2 < n; ++s2) {
        double w3 = mu_b[s1] * pi_b(s1, a1) * mdp.prob(s1, a1, s2);
        if (w3 == 0.0) continue;
        for (int a2 = 0; a2 < m; ++a2) {
          double w = w3 * pi_b(s2, a2);
          if (w == 0.0) continue;
          out.v += w * f_is(mdp, q, Transition{s1, a1, s2, a2}, pi, pi_b).v;
        }
      }
  return out;
}

QTable expected_f_etd(const Mdp& mdp, const Policy& pi_b, const Vec& mu_b, const QTable& q, const Policy& pi) {
  const int n = mdp.n, m = mdp.m;
  QTable out(n, m, 0.0);
  for (int s1 = 0; s1 < n; ++s1)
    for (int a1 = 0; a1 < m; ++a1)
      for (int s2 = 0; s2 < n; ++s2) {
        double w = mu_b[s1] * pi_b(s1, a1) * mdp.prob(s1, a1, s2);
        if (w == 0.0) continue;
        out.v += w * f_etd(mdp, q, s1, a1, s2, pi).v;
      }
  return out;
}

double weighted_inner(const Vec& x, const Vec& y, const Vec& nu) { return nu.dot(x.cwiseProduct(y)); }

Diagnostician::Diagnostician(const Mdp& mdp, const Policy& pi_b, const QTable& q_star, const WeightCert& cert,
                             const Schedule& schedule, CriticRule critic)
    : mdp_(mdp),
      pi_b_(pi_b),
      q_star_(q_star),
      cert_(cert),
      schedule_(schedule),
      critic_(critic),
      d_(sampling_weights(mdp, pi_b)) {}

Snapshot Diagnostician::measure(const StepContext& ctx) {
  const RunState& st = ctx.state;
  const Vec& nu = cert_.nu;

  // Q* - Q^pi for pi_t and pi_{t+1}; the t-side is reused from the previous
  // step whenever the policies match exactly.
  QTable gap_t, gap_next;
  if (have_prev_ && prev_t_ + 1 == st.t && cached_next_pi_.v == st.pi.v) {
    gap_t = cached_next_gap_;
  } else {
    gap_t = optimality_gap(mdp_, q_star_, st.pi);
  }
  gap_next = optimality_gap(mdp_, q_star_, ctx.pi_next);
  QTable qpi(mdp_.n, mdp_.m), qpi_next(mdp_.n, mdp_.m);
  qpi.v = q_star_.v - gap_t.v;
  qpi_next.v = q_star_.v - gap_next.v;

  Snapshot out;
  out.t = st.t;
  out.s = st.s;
  out.a = st.a;
  out.alpha = ctx.alpha;
  out.omega = ctx.omega;
  out.tau = ctx.tau;
  out.gap = sup_norm(gap_t.v);
  out.gap_next = sup_norm(gap_next.v);
  out.V = out.gap * out.gap;
  out.V_next = out.gap_next * out.gap_next;
  out.mse = out.V;
  Vec err = st.q.v - qpi.v;
  out.xi = sup_norm(err);
  out.W = half_sq(err, nu);
  out.W_next = half_sq(ctx.q_next.v - qpi_next.v, nu);
  out.chi = temperature_error(mdp_, st.q, ctx.pi_tilde);
  // Q^{pi_t} - Q^{pi_{t+1}} = gap_{t+1} - gap_t
  Vec shift = gap_next.v - gap_t.v;
  out.delta = shift.maxCoeff();
  out.target_shift = sup_norm(shift);
  out.step_tv = max_tv(st.pi, ctx.pi_next);

  if (have_prev_ && prev_t_ < st.t) {
    out.has_window = true;
    out.window_from = prev_t_;
    out.window_tv = max_tv(prev_pi_, st.pi);
    out.window_qpi_shift = sup_norm(prev_gap_.v - gap_t.v);
    out.window_omega_sum = omega_sum(schedule_, prev_t_, st.t - 1);
  }

  if (with_decomposition_ && critic_ != CriticRule::oracle) {
    out.has_decomposition = true;
    out.dec = decompose(mdp_, d_, nu, st.q, qpi, qpi_next, ctx.q_next, st.pi, ctx.pi_next, pi_b_, ctx.y, ctx.alpha,
                        critic_);
  }

  have_prev_ = true;
  prev_t_ = st.t;
  prev_pi_ = st.pi;
  prev_gap_ = gap_t;
  cached_next_pi_ = ctx.pi_next;
  cached_next_gap_ = gap_next;
  return out;
}

Snapshot snapshot_metrics(const Mdp& mdp, const QTable& q_star, const RunState& state, const Policy& pi_tilde,
                          const Policy& pi_next, const WeightCert& cert) {
  check_shape(mdp, state.q, "snapshot_metrics: Q_t");
  check_shape(mdp, pi_next, "snapshot_metrics: pi_next");
  Policy pi_b = Policy::uniform(mdp.n, mdp.m);
  Diagnostician diag(mdp, pi_b, q_star, cert, Schedule{}, CriticRule::oracle);
  diag.set_decomposition(false);
  // Q_{t+1} is not part of the inputs; W_next is reported against Q_t.
  StepContext ctx{state, pi_tilde, pi_next, state.q, Transition{}, 0.0, 0.0, 0.0};
  return diag.measure(ctx);
}

StepDecomposition critic_step_decomposition(const Mdp& mdp, const Policy& pi_b, const RunState& state,
                                            const QTable& next_q, const Policy& pi_next, const Transition& y,
                                            const WeightCert& cert, double alpha_t, CriticRule critic) {
  if (critic == CriticRule::oracle)
    throw Error(ErrorKind::InvalidArgument, "the oracle critic has no stochastic update to decompose");
  check_shape(mdp, next_q, "critic_step_decomposition: Q_{t+1}");
  Vec d = sampling_weights(mdp, pi_b);
  QTable q_pi = solve_q_pi(mdp, state.pi);
  QTable q_pi_next = solve_q_pi(mdp, pi_next);
  return decompose(mdp, d, cert.nu, state.q, q_pi, q_pi_next, next_q, state.pi, pi_next, pi_b, y, alpha_t, critic);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAIL";
    case Verdict::informational:
      return "INFORMATIONAL";
  }
  return "?";
}

const InequalityVerdict* VerdictReport::find(const std::string& name) const {
  for (const auto& it : items)
    if (it.name == name) return &it;
  return nullptr;
}

bool VerdictReport::all_pass() const {
  return std::none_of(items.begin(), items.end(), [](const auto& it) { return it.status == Verdict::fail; });
}

std::string VerdictReport::to_json() const {
  nlohmann::ordered_json j;
  j["certified_factor"] = certified_factor;
  j["nu"] = nu;
  auto& arr = j["inequalities"] = nlohmann::ordered_json::array();
  for (const auto& it : items) {
    nlohmann::ordered_json e;
    e["name"] = it.name;
    e["kind"] = it.kind;
    e["status"] = to_string(it.status);
    e["checked"] = it.checked;
    e["violations"] = it.violations;
    e["violation_fraction"] = it.checked ? static_cast<double>(it.violations) / it.checked : 0.0;
    if (std::isfinite(it.worst_excess))
      e["worst_excess"] = it.worst_excess;
    else
      e["worst_excess"] = nullptr;
    e["first_violation_t"] = it.first_violation_t;
    e["note"] = it.note;
    auto& cells = e["cells"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < it.cell_t.size(); ++i)
      cells.push_back({{"t", it.cell_t[i]}, {"status", to_string(it.cell_status[i])}});
    arr.push_back(std::move(e));
  }
  return j.dump(2);
}

bool stepsizes_conform(const VerdictContext& ctx, std::int64_t t) {
  if (ctx.critic == CriticRule::oracle) return true;
  if (!ctx.cert_valid || !(ctx.c_hat < 1.0)) return false;
  Stepsizes st = stepsize_at(ctx.schedule, t);
  const double g = 1.0 - ctx.gamma;
  const double gap = 1.0 - ctx.c_hat;
  double divisor = ctx.critic == CriticRule::is ? 20.0 : 16.0;
  if (st.omega > g * g * g * gap * ctx.nu_min / divisor * st.alpha) return false;
  if (ctx.critic == CriticRule::is) {
    int z = ctx.z_of ? ctx.z_of(t) : 1;
    double a = alpha_sum(ctx.schedule, t - z, t - 1);
    if (a > ctx.pi_b_min * ctx.pi_b_min * ctx.nu_min * gap / 200.0) return false;
  }
  return true;
}

namespace {

class Tally {
 public:
  Tally(std::string name, std::string kind, bool record) : record_(record) {
    v_.name = std::move(name);
    v_.kind = std::move(kind);
  }

  // One (t, check) pair; excess > 0 is a violation.
  void add(std::int64_t t, double excess, bool informational = false) {
    ++v_.checked;
    bool bad = excess > 0.0;
    v_.worst_excess = std::max(v_.worst_excess, excess);
    if (bad) {
      ++v_.violations;
      if (v_.first_violation_t < 0 || t < v_.first_violation_t) v_.first_violation_t = t;
    }
    if (informational) ++informational_;
    Verdict cell = informational ? Verdict::informational : (bad ? Verdict::fail : Verdict::pass);
    if (!record_) return;
    auto it = cells_.find(t);
    if (it == cells_.end())
      cells_.emplace(t, cell);
    else if (cell == Verdict::fail || (cell == Verdict::informational && it->second == Verdict::pass))
      it->second = cell;
  }

  // Pathwise: any violation fails. Informational checks never fail.
  InequalityVerdict pathwise(bool informational, std::string note) {
    v_.status = informational ? Verdict::informational : (v_.violations > 0 ? Verdict::fail : Verdict::pass);
    v_.note = std::move(note);
    return finish();
  }

  InequalityVerdict fraction(double max_fraction, std::string note) {
    if (v_.checked == 0 || informational_ == v_.checked)
      v_.status = Verdict::informational;
    else
      v_.status =
          static_cast<double>(v_.violations) / static_cast<double>(v_.checked) <= max_fraction ? Verdict::pass
                                                                                               : Verdict::fail;
    v_.note = std::move(note);
    return finish();
  }

 private:
  InequalityVerdict finish() {
    for (auto [t, c] : cells_) {
      v_.cell_t.push_back(t);
      v_.cell_status.push_back(c);
    }
    return v_;
  }

  bool record_;
  std::int64_t informational_ = 0;
  InequalityVerdict v_;
  std::map<std::int64_t, Verdict> cells_;
};

double stochastic_term(const VerdictContext& ctx, std::int64_t t) {
  const double g = 1.0 - ctx.gamma;
  Stepsizes st = stepsize_at(ctx.schedule, t);
  int z = ctx.z_of ? ctx.z_of(t) : 1;
  double a = alpha_sum(ctx.schedule, t - z, t - 1);
  if (ctx.critic == CriticRule::is)
    return 108.0 * st.alpha * a / (g * g * ctx.pi_b_min * ctx.pi_b_min * ctx.nu_min);
  return 7.0 * st.alpha * a / (g * g);
}

VerdictReport pathwise_report(const std::vector<std::vector<Snapshot>>& traces, const VerdictContext& ctx) {
  const double g = 1.0 - ctx.gamma;
  const double eps = ctx.slack;
  const bool rec = ctx.record_cells;
  Tally actor("actor_drift", "pathwise", rec), sq("squared_actor_drift", "pathwise", rec),
      delta("delta_bound", "pathwise", rec), target("target_shift", "pathwise", rec),
      tv("tv_increment", "pathwise", rec), qpi("qpi_shift", "pathwise", rec), wk("wk_bound", "pathwise", rec),
      ident("decomposition_identity", "pathwise", rec), t1("t1_bound", "pathwise", rec),
      chi("chi_bound", "pathwise", rec);

  const double wk_alpha = alpha_sum(ctx.schedule, 0, ctx.K - 1);
  const bool wk_applies = wk_alpha <= ctx.pi_b_min * std::sqrt(ctx.nu_min) / 4.0;
  bool saw_k = false;

  for (const auto& trace : traces) {
    for (const Snapshot& x : trace) {
      const double w = x.omega;
      actor.add(x.t, x.gap_next - ((1.0 - w * g) * x.gap + 2.0 * w * x.xi / g + w * x.chi / g) - eps);
      sq.add(x.t, x.V_next -
                      ((1.0 - w * g) * x.V + 6.0 * w / (g * g * g) * x.xi * x.xi + 5.0 * w / (g * g * g) * x.chi * x.chi) -
                      eps);
      delta.add(x.t, x.delta - w * (2.0 * ctx.gamma * x.xi + x.chi) / g - eps);
      target.add(x.t, x.target_shift - w / g * (x.gap + 2.0 * x.xi + x.chi) - eps);
      tv.add(x.t, x.step_tv - w - eps);
      qpi.add(x.t, x.target_shift - 2.0 * w / (g * g) - eps);
      if (x.has_window) {
        tv.add(x.t, x.window_tv - x.window_omega_sum - eps);
        qpi.add(x.t, x.window_qpi_shift - 2.0 * x.window_omega_sum / (g * g) - eps);
      }
      chi.add(x.t, x.chi - temperature_budget(ctx.schedule, x.t) - eps);
      if (x.t == ctx.K) {
        saw_k = true;
        wk.add(x.t, x.V + x.W - 3.0 / (g * g) - eps, !wk_applies);
      }
      if (x.has_decomposition) {
        double scale = std::max({1.0, x.W, x.W_next});
        ident.add(x.t, std::abs(x.dec.sum() - (x.W_next - x.W)) - eps * scale);
        t1.add(x.t, x.dec.T1 + 2.0 * x.alpha * (1.0 - ctx.c_hat) * x.W - eps * std::max(1.0, x.W), !ctx.cert_valid);
      }
    }
  }

  VerdictReport rep;
  rep.items.push_back(actor.pathwise(false, ""));
  rep.items.push_back(sq.pathwise(false, ""));
  rep.items.push_back(delta.pathwise(false, ""));
  rep.items.push_back(target.pathwise(false, ""));
  rep.items.push_back(tv.pathwise(false, "one-step and between consecutive snapshots"));
  rep.items.push_back(qpi.pathwise(false, "one-step and between consecutive snapshots"));
  rep.items.push_back(chi.pathwise(false, ""));
  if (saw_k)
    rep.items.push_back(wk.pathwise(!wk_applies, wk_applies ? "" : "alpha_{0,K-1} exceeds pi_b,min sqrt(nu_min)/4"));
  else
    rep.items.push_back(wk.pathwise(true, "no snapshot at t = K"));
  rep.items.push_back(ident.pathwise(false, "tolerance scaled by max(1, W_t, W_{t+1})"));
  rep.items.push_back(t1.pathwise(!ctx.cert_valid, ctx.cert_valid ? "" : "no weighted-norm certificate"));
  return rep;
}

VerdictReport monte_carlo_report(const std::vector<std::vector<Snapshot>>& traces, const VerdictContext& ctx,
                                 MonteCarloWindow window) {
  const std::size_t R = traces.size();
  if (R < 30)
    throw Error(ErrorKind::InsufficientRuns, "Monte-Carlo verdicts need at least 30 runs, got " + std::to_string(R));
  const double g = 1.0 - ctx.gamma;
  std::map<std::int64_t, std::vector<const Snapshot*>> by_t;
  for (const auto& trace : traces)
    for (const Snapshot& x : trace) by_t[x.t].push_back(&x);

  Tally critic("critic_drift", "monte_carlo", ctx.record_cells), coupled("coupled_drift", "monte_carlo",
                                                                         ctx.record_cells);
  std::vector<double> dc(R), dj(R);
  for (const auto& [t, xs] : by_t) {
    if (xs.size() != R || t < ctx.K) continue;
    if (window.to > window.from && (t < window.from || t > window.to)) continue;
    bool conform = stepsizes_conform(ctx, t);
    double stoch = stochastic_term(ctx, t);
    for (std::size_t i = 0; i < R; ++i) {
      const Snapshot& x = *xs[i];
      double chi2 = x.chi * x.chi;
      dc[i] = x.W_next -
              ((1.0 - x.alpha * (1.0 - ctx.c_hat)) * x.W + 0.5 * g * x.omega * (x.V + chi2) + stoch);
      dj[i] = (x.V_next + x.W_next) -
              ((1.0 - 0.5 * x.omega * g) * (x.V + x.W) + 6.0 * x.omega / (g * g * g) * chi2 + stoch);
    }
    auto lower = [&](const std::vector<double>& d) {
      double mean = 0.0;
      for (double v : d) mean += v;
      mean /= static_cast<double>(R);
      double ss = 0.0;
      for (double v : d) ss += (v - mean) * (v - mean);
      double sd = std::sqrt(ss / static_cast<double>(R - 1));
      return mean - 1.96 * sd / std::sqrt(static_cast<double>(R));
    };
    critic.add(t, lower(dc), !conform);
    coupled.add(t, lower(dj), !conform);
  }
  std::string note = "certified factor and weights in place of the contraction constants; 95% CI over " +
                     std::to_string(R) + " runs";
  VerdictReport rep;
  rep.items.push_back(critic.fraction(0.05, note));
  rep.items.push_back(coupled.fraction(0.05, note));
  return rep;
}

}  // namespace

VerdictReport verify_inequalities(const std::vector<std::vector<Snapshot>>& traces, const VerdictContext& ctx,
                                  VerifyMode mode, MonteCarloWindow window) {
  VerdictReport rep =
      mode == VerifyMode::pathwise ? pathwise_report(traces, ctx) : monte_carlo_report(traces, ctx, window);
  rep.certified_factor = ctx.c_hat;
  rep.nu = ctx.nu;
  return rep;
}

std::string PropertyReport::to_json() const {
  nlohmann::ordered_json j;
  j["samples"] = samples;
  j["violations"] = {{"contraction", violations_contraction},
                     {"is_lipschitz", violations_is_lipschitz},
                     {"etd_lipschitz", violations_etd_lipschitz},
                     {"policy_shift", violations_policy_shift},
                     {"row_sum", violations_row_sum}};
  j["total_violations"] = total_violations();
  j["worst_contraction_ratio"] = worst_contraction_ratio;
  return j.dump(2);
}

PropertyReport operator_property_check(const Mdp& mdp, const Policy& pi_b, const WeightCert& cert,
                                       std::int64_t samples, std::uint64_t seed) {
  check_shape(mdp, pi_b, "operator_property_check: behavior policy");
  const int n = mdp.n, m = mdp.m;
  const double eps = 1e-9;
  const double bound = 1.0 / (1.0 - mdp.gamma);
  const double pi_min = min_entry(pi_b);
  const bool check_contraction = !cert.fallback;
  Vec d = sampling_weights(mdp, pi_b);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ds(0, n - 1), da(0, m - 1);

  PropertyReport rep;
  rep.samples = samples;
  for (std::int64_t i = 0; i < samples; ++i) {
    QTable q1 = random_q(n, m, -bound, bound, rng);
    QTable q2 = random_q(n, m, -bound, bound, rng);
    Policy pi = random_policy(n, m, rng);
    Policy pi2 = random_policy(n, m, rng);
    Transition y{ds(rng), da(rng), ds(rng), da(rng)};
    const double dq_inf = sup_norm(q1.v - q2.v);

    if (check_contraction) {
      double lhs = nu_norm(fbar(mdp, d, q1, pi).v - fbar(mdp, d, q2, pi).v, cert.nu);
      double base = nu_norm(q1.v - q2.v, cert.nu);
      if (base > 0.0) rep.worst_contraction_ratio = std::max(rep.worst_contraction_ratio, lhs / base);
      if (lhs > cert.certified_factor * base + eps) ++rep.violations_contraction;
    }
    if (sup_norm(f_is(mdp, q1, y, pi, pi_b).v - f_is(mdp, q2, y, pi, pi_b).v) > dq_inf / pi_min + eps)
      ++rep.violations_is_lipschitz;
    if (sup_norm(f_etd(mdp, q1, y.s, y.a, y.s2, pi).v - f_etd(mdp, q2, y.s, y.a, y.s2, pi).v) > dq_inf + eps)
      ++rep.violations_etd_lipschitz;

    const double tv = max_tv(pi, pi2);
    const double q_inf = sup_norm(q1.v);
    bool shift_bad = sup_norm(fbar(mdp, d, q1, pi).v - fbar(mdp, d, q1, pi2).v) > 2.0 * tv * q_inf + eps;
    shift_bad |= sup_norm(f_is(mdp, q1, y, pi, pi_b).v - f_is(mdp, q1, y, pi2, pi_b).v) >
                 2.0 * tv * q_inf / pi_min + eps;
    if (shift_bad) ++rep.violations_policy_shift;

    Eigen::MatrixXd M = contraction_matrix(mdp, d, pi);
    if (M.minCoeff() < -eps || M.cwiseAbs().rowwise().sum().maxCoeff() > 1.0 + eps) ++rep.violations_row_sum;
  }
  return rep;
}

}  // namespace offac
