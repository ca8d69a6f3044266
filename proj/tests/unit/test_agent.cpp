#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "nsp/agent.hpp"
#include "nsp/heuristic.hpp"

using namespace nsp;

namespace {

std::vector<double> random_scores(Rng& rng, std::size_t n) {
  std::vector<double> z(n);
  for (auto& v : z) v = 6.0 * rng.uniform() - 3.0;
  return z;
}

// 8 nodes: two EDCs of two servers and one CDC of one server.
TopologyConfig toy_topology() {
  TopologyConfig cfg;
  cfg.edc = DcProfile{2, 2, 10000, 10000};
  cfg.cdc = DcProfile{1, 1, 100000, 100000};
  cfg.ccp = DcProfile{0, 0, 100000, 100000};
  return cfg;
}

NsprClass small_chain() {
  return NsprClass{"small", 3, 10, 60, 1000, 10.0, 1.0};
}

}  // namespace

TEST_SUITE("agent") {
  TEST_CASE("shaping examples") {
    const std::vector<double> z{1.0, 0.2, -0.3};
    const auto linear = shape(z, 1, 1.0, 1.0, 0.0);
    CHECK(linear == std::vector<double>{1.0, 1.0, -0.3});
    const auto squared = shape(z, 1, 1.0, 2.0, 0.0);
    CHECK(squared[1] == doctest::Approx(0.84));
    CHECK(shape(z, 0, 1.0, 2.0, 0.0) == z);
    CHECK_THROWS_AS(shape(z, 3, 1.0, 1.0, 0.0), std::out_of_range);
  }

  TEST_CASE("shaping properties on random vectors") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
      const auto z = random_scores(rng, 2 + rng.below(20));
      const auto a = static_cast<NodeId>(rng.below(z.size()));
      const auto s = shape(z, a, 1.0, 1.0, 0.0);
      const double top = *std::max_element(s.begin(), s.end());
      CHECK(s[static_cast<std::size_t>(a)] == top);
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (k != static_cast<std::size_t>(a)) CHECK(s[k] == z[k]);
      }
      const auto strict = shape(z, a, 1.0, 1.0, 0.25);
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (k != static_cast<std::size_t>(a)) CHECK(strict[static_cast<std::size_t>(a)] > strict[k]);
      }
      const auto p = softmax(strict);
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (k != static_cast<std::size_t>(a)) CHECK(p[static_cast<std::size_t>(a)] > p[k]);
      }
    }
  }

  TEST_CASE("shape_backward against finite differences") {
    Rng rng(4);
    for (double beta : {0.5, 1.0, 2.0}) {
      for (int i = 0; i < 50; ++i) {
        auto z = random_scores(rng, 6);
        const auto a = static_cast<NodeId>(rng.below(6));
        const double eta = rng.uniform() * 0.3;
        std::vector<double> up(6);
        for (auto& v : up) v = rng.uniform() - 0.5;
        const auto d = shape_backward(z, a, 0.7, beta, eta, up);
        for (std::size_t k = 0; k < 6; ++k) {
          auto zp = z, zm = z;
          zp[k] += 1e-6;
          zm[k] -= 1e-6;
          const auto sp = shape(zp, a, 0.7, beta, eta);
          const auto sm = shape(zm, a, 0.7, beta, eta);
          double fd = 0.0;
          for (std::size_t j = 0; j < 6; ++j) fd += up[j] * (sp[j] - sm[j]) / 2e-6;
          CHECK(d[k] == doctest::Approx(fd).epsilon(1e-5));
        }
      }
    }
  }

  TEST_CASE("sampling a point mass") {
    Rng rng(1);
    const std::vector<double> p{1.0, 0.0, 0.0};
    for (int i = 0; i < 100; ++i) CHECK(sample_categorical(p, rng) == 0);
    const std::vector<double> q{0.0, 0.0, 1.0};
    for (int i = 0; i < 100; ++i) CHECK(sample_categorical(q, rng) == 2);
  }

  TEST_CASE("sampling frequencies") {
    Rng rng(6);
    const std::vector<double> p{0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 20000; ++i) counts[static_cast<std::size_t>(sample_categorical(p, rng))]++;
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(counts[k] / 20000.0 - p[k]) < 0.02);
  }

  TEST_CASE("feature encoding") {
    Psn psn = build_reference_psn(TopologyConfig{});
    PlacementEnv env(psn);
    const auto scale = FeatureScale::from_psn(psn);
    const State& s = env.reset(make_nspr(volatile_class(), 0, 1, 0.0, 1.0));
    const Features f = encode(s, scale);
    const auto server = static_cast<std::size_t>(psn.servers()[0]);
    CHECK(f.nodes(server, 0) == 1.0);
    CHECK(f.nodes(server, 1) == 1.0);
    CHECK(f.nspr[0] == 0.5);
    CHECK(f.nspr[3] == 1.0);
    for (std::size_t i = 0; i < psn.node_count(); ++i) CHECK(f.nodes(i, 3) == 0.0);
  }

  TEST_CASE("selection without shaping is the plain softmax policy") {
    Psn psn = build_reference_psn(toy_topology());
    ActorCritic nets(psn, Hyper{}, 6, 2, 5);
    PlacementEnv env(psn);
    env.reset(make_nspr(small_chain(), 0, 1, 0.0, 1.0));
    Rng r1(9), r2(9);
    const auto c = select_action(env.state(), psn, nets.actor(), nets.scale(), nets.hyper(), r1);
    const auto pi = softmax(nets.actor().forward(encode(env.state(), nets.scale())).output);
    CHECK(c.probs == pi);
    CHECK(c.action == sample_categorical(pi, r2));
    CHECK_FALSE(c.preferred.has_value());
  }

  TEST_CASE("shaped selection boosts the heuristic choice") {
    Psn psn = build_reference_psn(toy_topology());
    Hyper hp;
    hp.shaping = true;
    hp.beta = 1.0;
    hp.eta = 0.5;
    ActorCritic nets(psn, hp, 6, 2, 5);
    PlacementEnv env(psn);
    env.reset(make_nspr(small_chain(), 0, 1, 0.0, 1.0));
    Rng rng(3);
    const auto c = select_action(env.state(), psn, nets.actor(), nets.scale(), nets.hyper(), rng);
    REQUIRE(c.preferred.has_value());
    CHECK(*c.preferred == heu_select(env.state(), psn));
    const auto best = argmax(c.probs);
    CHECK(static_cast<NodeId>(best) == *c.preferred);
  }

  TEST_CASE("returns") {
    const std::vector<double> r{0.0, 0.0, 5.0};
    const auto g = discounted_returns(r, 0.5);
    CHECK(g == std::vector<double>{1.25, 2.5, 5.0});
  }

  TEST_CASE("zero rewards with a zero critic give no actor gradient") {
    Psn psn = build_reference_psn(toy_topology());
    ActorCritic nets(psn, Hyper{}, 6, 2, 5);
    for (auto& p : nets.critic().params()) p.fill(0.0);
    PlacementEnv env(psn);
    Rng rng(1);
    auto steps = oracle::rollout(env, make_nspr(small_chain(), 0, 1, 0.0, 1.0), nets, rng);
    for (auto& s : steps) s.reward = 0.0;
    const auto g = episode_gradients(nets, steps);
    CHECK(global_norm(g.actor) == 0.0);
    CHECK(g.actor_loss == 0.0);
  }

  TEST_CASE("single-step failure targets -10") {
    Psn psn = build_reference_psn(toy_topology());
    ActorCritic nets(psn, Hyper{}, 6, 2, 5);
    PlacementEnv env(psn);
    const Nspr nspr = make_nspr(small_chain(), 0, 1, 0.0, 1.0);
    env.reset(nspr);
    StepRecord rec;
    Rng rng(1);
    rec.choice = select_action(env.state(), psn, nets.actor(), nets.scale(), nets.hyper(), rng);
    rec.choice.action = psn.dcs()[0].switch_id;  // force the failure
    rec.choice.log_prob = std::log(rec.choice.probs[static_cast<std::size_t>(rec.choice.action)]);
    rec.critic_trace = nets.critic().forward(rec.choice.features);
    rec.value = rec.critic_trace.output[0];
    const auto out = env.step(rec.choice.action);
    REQUIRE(out.done);
    rec.reward = normalize_reward(out.reward, nspr.vnf_count);
    const std::vector<StepRecord> steps{rec};
    const auto g = episode_gradients(nets, steps);
    CHECK(g.returns == std::vector<double>{-10.0});
    CHECK(g.critic_loss == doctest::Approx((-10.0 - rec.value) * (-10.0 - rec.value)));
  }

  TEST_CASE("episode gradients match finite differences") {
    Psn psn = build_reference_psn(toy_topology());
    REQUIRE(psn.node_count() == 8);
    for (bool shaping : {false, true}) {
      Hyper hp;
      hp.shaping = shaping;
      hp.entropy_coef = 0.01;
      hp.eta = 0.1;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ActorCritic nets(psn, hp, 5, 3, seed);
        // move off the zero-bias ReLU kink of a fresh init
        Rng jitter(100 + seed);
        for (Network* net : {&nets.actor(), &nets.critic()})
          for (auto& m : net->params())
            for (auto& v : m.values()) v += 0.2 * (jitter.uniform() - 0.5);
        Psn work = psn;
        PlacementEnv env(work);
        Rng rng(seed);
        const auto steps = oracle::rollout(env, make_nspr(small_chain(), 0, 1, 0.0, 1.0), nets, rng);
        const auto r = oracle::check_episode_gradients(nets, steps);
        CHECK(r.actor_rel < 1e-4);
        CHECK(r.critic_rel < 1e-4);
      }
    }
  }

  TEST_CASE("identical seeds give identical updates") {
    Psn a = build_reference_psn(toy_topology());
    Psn b = a;
    Hyper hp;
    hp.shaping = true;
    ActorCritic na(a, hp, 6, 2, 7), nb(b, hp, 6, 2, 7);
    PlacementEnv ea(a), eb(b);
    Rng ra(2), rb(2);
    for (int i = 0; i < 5; ++i) {
      const Nspr n = make_nspr(small_chain(), 0, i, 0.0, 1.0);
      const auto x = train_episode(ea, n, na, ra);
      const auto y = train_episode(eb, n, nb, rb);
      CHECK(x.log.actions == y.log.actions);
      if (x.accepted) ea.take_record();
      if (y.accepted) eb.take_record();
    }
    CHECK(na.actor().params() == nb.actor().params());
    CHECK(na.critic().params() == nb.critic().params());
  }

  TEST_CASE("critic loss falls on a fixed-policy toy") {
    // three identical servers and no switch: every action earns the same reward
    Psn psn;
    for (int i = 0; i < 3; ++i) psn.add_server(-1, 50, 300);
    psn.add_link(0, 1, 10000);
    psn.add_link(1, 2, 10000);
    psn.add_link(0, 2, 10000);
    Hyper hp;
    ActorCritic nets(psn, hp, 6, 2, 11);
    PlacementEnv env(psn);
    Rng rng(5);
    const NsprClass one{"one", 1, 25, 150, 0, 1.0, 1.0};
    std::vector<double> losses;
    for (int e = 0; e < 200; ++e) {
      auto steps = oracle::rollout(env, make_nspr(one, 0, e, 0.0, 1.0), nets, rng);
      if (env.log().accepted) {
        auto rec = env.take_record();
        on_departure(psn, rec);
      }
      auto g = episode_gradients(nets, steps);
      for (auto& m : g.actor) m.fill(0.0);  // the policy stays put
      losses.push_back(g.critic_loss);
      nets.apply(g.actor, g.critic);
    }
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 20; ++i) {
      first += losses[static_cast<std::size_t>(i)];
      last += losses[losses.size() - 1 - static_cast<std::size_t>(i)];
    }
    CHECK(last < 0.5 * first);
  }
}
