#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "offac/actor_critic.hpp"
#include "offac/chain.hpp"

using namespace offac;

namespace {

QTable q_row(std::initializer_list<double> vals) {
  QTable q(1, static_cast<int>(vals.size()));
  int a = 0;
  for (double v : vals) q(0, a++) = v;
  return q;
}

struct Recorder : StepObserver {
  std::vector<Transition> seen;
  bool wants(std::int64_t) const override { return true; }
  void observe(const StepContext& ctx) override { seen.push_back(ctx.y); }
};

}  // namespace

TEST(ActorTarget, ClosedForms) {
  QTable q = q_row({0.0, 1.0});
  Policy u = Policy::uniform(1, 2);
  Policy sm = actor_target(u, q, 1.0, ActorRule::softmax);
  EXPECT_NEAR(sm(0, 0), 0.26894, 1e-5);
  EXPECT_NEAR(sm(0, 1), 0.73106, 1e-5);
  // npg from uniform coincides with softmax
  Policy np = actor_target(u, q, 1.0, ActorRule::npg);
  EXPECT_LT((np.v - sm.v).cwiseAbs().maxCoeff(), 1e-15);
  Policy eg = actor_target(u, q, 0.2, ActorRule::eps_greedy);
  EXPECT_NEAR(eg(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(eg(0, 1), 0.9, 1e-15);
  for (ActorRule r : {ActorRule::softmax, ActorRule::npg, ActorRule::eps_greedy})
    EXPECT_EQ(actor_target(u, q, 0.0, r).v, Policy::deterministic(1, 2, {1}).v);
}

TEST(ActorTarget, NpgKeepsPolicyUnderFlatQAndRejectsBadTau) {
  Policy pi(1, 3);
  pi.v << 0.2, 0.5, 0.3;
  Policy out = actor_target(pi, q_row({1.0, 1.0, 1.0}), 0.7, ActorRule::npg);
  EXPECT_LT((out.v - pi.v).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(actor_target(pi, q_row({1, 1, 1}), -1.0, ActorRule::softmax), Error);
  EXPECT_THROW(actor_target(pi, q_row({1, 1, 1}), 1.5, ActorRule::eps_greedy), Error);
}

TEST(Temperature, Caps) {
  Schedule sch{0.0, 1.0, 0.1, 1.0, 0.1};
  Policy u = Policy::uniform(1, 2);
  QTable zero(1, 2);
  EXPECT_NEAR(temperature_cap(sch, 0, ActorRule::softmax, u, q_row({0, 1}), 0.5), 0.14427, 1e-5);
  EXPECT_EQ(temperature_cap(sch, 0, ActorRule::eps_greedy, u, zero, 0.5), 1.0);
  EXPECT_NEAR(temperature_cap(sch, 0, ActorRule::eps_greedy, u, q_row({0, 2}), 0.5), 0.05, 1e-15);
  sch.tau0 = 0.0;
  for (ActorRule r : {ActorRule::softmax, ActorRule::npg, ActorRule::eps_greedy})
    EXPECT_EQ(temperature_cap(sch, 5, r, u, q_row({0, 1}), 0.5), 0.0);
}

TEST(Temperature, NpgAppliedTemperatureBoundsBellmanGap) {
  std::mt19937_64 rng(12);
  Schedule sch{0.5, 1.0, 0.1, 4.0, 0.3};
  for (int i = 0; i < 200; ++i) {
    Mdp mdp = random_mdp(3, 3, 0.7, rng);
    Policy pi = random_policy(3, 3, rng, true);
    QTable q = random_q(3, 3, 0, 1 / (1 - mdp.gamma), rng);
    double tau = applied_temperature(sch, i, ActorRule::npg, pi, q, mdp.gamma);
    Policy g = actor_target(pi, q, tau, ActorRule::npg);
    double chi = sup_norm(apply_bellman(mdp, q).v - apply_bellman(mdp, q, g).v);
    EXPECT_LE(chi, temperature_budget(sch, i) + 1e-12);
  }
}

TEST(Stepsizes, Values) {
  Schedule poly{0.6, 1.0, 0.5, 10.0, 0.0};
  EXPECT_NEAR(stepsize_at(poly, 90).alpha, 0.06310, 1e-5);
  Schedule harm{1.0, 0.6, 0.3, 10.0, 0.0};
  EXPECT_NEAR(stepsize_at(harm, 0).omega, 0.03, 1e-15);
  EXPECT_NEAR(alpha_sum(harm, 0, 2), 0.6 / 10 + 0.6 / 11 + 0.6 / 12, 1e-15);
  EXPECT_EQ(alpha_sum(harm, 3, 2), 0.0);
  EXPECT_EQ(alpha_sum(harm, -4, 0), alpha_sum(harm, 0, 0));
  Schedule c{0.0, 0.5, 0.01, 1.0, 0.0};
  EXPECT_EQ(stepsize_at(c, 1000).alpha, 0.5);
}

TEST(Stepsizes, Validation) {
  Schedule bad{0.0, 0.1, 0.2, 1.0, 0.0};
  EXPECT_THROW(bad.validate(), ValidationError);
  Schedule big{0.0, 4.0, 2.0, 1.0, 0.0};
  EXPECT_THROW(big.validate(), ValidationError);
  Schedule ok{1.0, 12.0, 6.0, 12.0, 0.0};
  EXPECT_NO_THROW(ok.validate());
}

TEST(Stepsizes, RatioThresholds) {
  Mdp mdp = chain2();
  WeightCert cert;
  cert.nu = Eigen::VectorXd::Constant(4, 0.25);
  cert.certified_factor = std::sqrt(0.875);
  EXPECT_NEAR(cr_threshold(mdp, cert, CriticRule::is), 1.0092e-4, 1e-8);
  EXPECT_NEAR(cr_threshold(mdp, cert, CriticRule::etd), 1.2615e-4, 1e-8);
  EXPECT_TRUE(std::isinf(cr_threshold(mdp, cert, CriticRule::oracle)));
  cert.certified_factor = 1.0;
  EXPECT_EQ(cr_threshold(mdp, cert, CriticRule::etd), 0.0);
}

TEST(Critic, TemporalDifferences) {
  Mdp mdp = chain2();
  QTable q(2, 2);
  q(1, 1) = 2.0;
  Policy b = Policy::uniform(2, 2);
  Policy next(2, 2);
  next.v << 0.5, 0.5, 0.75, 0.25;
  Transition y{1, 0, 1, 1};
  // 1 + 0.5 * (0.25/0.5) * 2
  EXPECT_NEAR(td_delta(mdp, q, next, b, y, CriticRule::is), 1.5, 1e-15);
  // 1 + 0.5 * (0.25 * 2)
  EXPECT_NEAR(td_delta(mdp, q, next, b, y, CriticRule::etd), 1.25, 1e-15);
  next.v << 0.5, 0.5, 0.0, 1.0;
  EXPECT_NEAR(td_delta(mdp, q, next, b, y, CriticRule::etd), 2.0, 1e-15);

  Policy zero_b(2, 2);
  zero_b.v << 0.5, 0.5, 1.0, 0.0;
  try {
    td_delta(mdp, q, next, zero_b, y, CriticRule::is);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroBehaviorProb);
  }
}

TEST(Run, ZeroHorizonReturnsInitialState) {
  Mdp mdp = chain2();
  Schedule sch{0.0, 0.5, 0.01, 1.0, 0.0};
  RunOptions opt;
  opt.seed = 3;
  RunState st = run(mdp, Policy::uniform(2, 2), sch, ActorRule::npg, CriticRule::etd, opt);
  EXPECT_EQ(st.t, 0);
  EXPECT_EQ(st.pi.v, Policy::uniform(2, 2).v);
  EXPECT_EQ(st.q.v, QTable(2, 2).v);
}

TEST(Run, DeterministicPerSeedAndLookAhead) {
  Mdp mdp = load_mdp(std::string(OFFAC_SOURCE_DIR) + "/data/ring3.json");
  Policy b = Policy::uniform(3, 2);
  Schedule sch{0.5, 0.5, 0.05, 2.0, 0.2};
  RunOptions opt;
  opt.horizon = 500;
  opt.seed = 99;
  RunState a = run(mdp, b, sch, ActorRule::softmax, CriticRule::is, opt);
  Recorder rec;
  opt.observer = &rec;
  RunState c = run(mdp, b, sch, ActorRule::softmax, CriticRule::is, opt);
  EXPECT_EQ(a.q.v, c.q.v);
  EXPECT_EQ(a.pi.v, c.pi.v);
  EXPECT_EQ(a.t, 500);
  // steps 0..T are observed, the last one only as look-ahead
  ASSERT_EQ(rec.seen.size(), 501u);
  EXPECT_EQ(rec.seen.back().s, a.s);
  EXPECT_EQ(rec.seen.back().a, a.a);
  for (std::size_t i = 1; i < rec.seen.size(); ++i) {
    EXPECT_EQ(rec.seen[i].s, rec.seen[i - 1].s2);
    EXPECT_EQ(rec.seen[i].a, rec.seen[i - 1].a2);
  }
  opt.seed = 100;
  opt.observer = nullptr;
  EXPECT_NE(run(mdp, b, sch, ActorRule::softmax, CriticRule::is, opt).q.v, a.q.v);
}

TEST(Run, EtdCriticStaysInRewardRange) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 5; ++i) {
    Mdp mdp = random_mdp(4, 3, 0.9, rng);
    Schedule sch{1.0, 1.0, 0.5, 1.0, 0.1};
    RunOptions opt;
    opt.horizon = 20000;
    opt.seed = i;
    RunStats stats;
    run(mdp, Policy::uniform(4, 3), sch, ActorRule::npg, CriticRule::etd, opt, &stats);
    EXPECT_GE(stats.q_min, 0.0);
    EXPECT_LE(stats.q_max, 1.0 / (1.0 - mdp.gamma) + 1e-9);
  }
}

TEST(Run, OracleWithUnitStepIsPolicyIteration) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 10; ++i) {
    Mdp mdp = random_mdp(5, 3, 0.8, rng);
    QStarResult qs = solve_q_star(mdp);
    Schedule sch{0.0, 2.0, 1.0, 1.0, 0.0};
    RunOptions opt;
    opt.horizon = 30;
    RunState st = run(mdp, Policy::uniform(5, 3), sch, ActorRule::npg, CriticRule::oracle, opt);
    EXPECT_EQ(st.pi.v, qs.policy.v);
    EXPECT_LT(sup_norm(st.q.v - qs.q.v), 1e-9);
  }
}

TEST(Run, RejectsNonPositiveBehavior) {
  Policy b(2, 2);
  b.v << 1.0, 0.0, 0.5, 0.5;
  RunOptions opt;
  opt.horizon = 3;
  try {
    run(chain2(), b, Schedule{}, ActorRule::npg, CriticRule::is, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveBehavior);
  }
}

TEST(Rng, CounterUniformIsStateless) {
  double u = counter_uniform(5, 17, 1);
  EXPECT_EQ(u, counter_uniform(5, 17, 1));
  EXPECT_NE(u, counter_uniform(5, 17, 0));
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += counter_uniform(1, i, 0);
  EXPECT_NEAR(mean / 100000, 0.5, 0.005);
}
