#include "nsp/agent.hpp"

#include <cmath>
#include <stdexcept>

#include "nsp/heuristic.hpp"

namespace nsp {

std::vector<std::string> Hyper::validate() const {
  std::vector<std::string> errors;
  if (!(actor_lr > 0.0)) errors.emplace_back("training.actor_lr: must be > 0");
  if (!(critic_lr > 0.0)) errors.emplace_back("training.critic_lr: must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) errors.emplace_back("training.gamma: must be in (0, 1]");
  if (!(beta > 0.0)) errors.emplace_back("training.beta: must be > 0");
  if (!(eta >= 0.0)) errors.emplace_back("training.eta: must be >= 0");
  if (!(xi >= 0.0)) errors.emplace_back("training.xi: must be >= 0");
  if (!(entropy_coef >= 0.0)) errors.emplace_back("training.entropy_coef: must be >= 0");
  if (!std::isfinite(grad_clip)) errors.emplace_back("training.grad_clip: must be finite");
  return errors;
}

FeatureScale FeatureScale::from_psn(const Psn& psn) {
  FeatureScale s{0.0, 0.0, 0.0};
  for (const auto& n : psn.nodes()) {
    s.cpu = std::max(s.cpu, static_cast<double>(n.cpu_max));
    s.ram = std::max(s.ram, static_cast<double>(n.ram_max));
    s.bw = std::max(s.bw, static_cast<double>(psn.node_bw_max(n.id)));
  }
  if (s.cpu <= 0.0) s.cpu = 1.0;
  if (s.ram <= 0.0) s.ram = 1.0;
  if (s.bw <= 0.0) s.bw = 1.0;
  return s;
}

Features encode(const State& state, const FeatureScale& scale) {
  const std::size_t n = state.cpu.size();
  const double vnfs = state.vnf_count > 0 ? static_cast<double>(state.vnf_count) : 1.0;
  Features f;
  f.nodes = Matrix(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    f.nodes(i, 0) = static_cast<double>(state.cpu[i]) / scale.cpu;
    f.nodes(i, 1) = static_cast<double>(state.ram[i]) / scale.ram;
    f.nodes(i, 2) = static_cast<double>(state.bw[i]) / scale.bw;
    f.nodes(i, 3) = static_cast<double>(state.chi[i]) / vnfs;
  }
  f.nspr = {static_cast<double>(state.req_cpu) / scale.cpu, static_cast<double>(state.req_ram) / scale.ram,
            static_cast<double>(state.req_bw) / scale.bw, static_cast<double>(state.remaining) / vnfs};
  return f;
}

std::size_t argmax(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

namespace {

void check_preferred(std::span<const double> z, NodeId preferred) {
  if (preferred < 0 || static_cast<std::size_t>(preferred) >= z.size()) {
    throw std::out_of_range("preferred action out of range");
  }
}

}  // namespace

std::vector<double> shape(std::span<const double> z, NodeId preferred, double xi, double beta, double eta) {
  check_preferred(z, preferred);
  std::vector<double> out(z.begin(), z.end());
  const auto a = static_cast<std::size_t>(preferred);
  const double top = z[argmax(z)];
  const double h = top - z[a] + eta;
  const double boost = xi * std::pow(h, beta);
  // z[a] + h can miss top + eta by an ulp, and then a* would not be the argmax
  out[a] = boost == h ? top + eta : z[a] + boost;
  return out;
}

std::vector<double> shape_backward(std::span<const double> z, NodeId preferred, double xi, double beta, double eta,
                                   std::span<const double> d_shaped) {
  check_preferred(z, preferred);
  std::vector<double> d(d_shaped.begin(), d_shaped.end());
  const auto a = static_cast<std::size_t>(preferred);
  const std::size_t top = argmax(z);
  if (top == a) return d;  // H reduces to the constant eta

  const double h = z[top] - z[a] + eta;
  double slope = 0.0;  // d(H^beta)/dH
  if (beta == 1.0) {
    slope = 1.0;
  } else if (h > 0.0) {
    slope = beta * std::pow(h, beta - 1.0);
  }
  const double g = d_shaped[a] * xi * slope;
  d[a] -= g;
  d[top] += g;
  return d;
}

NodeId sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw std::invalid_argument("empty distribution");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    acc += probs[i];
    if (u < acc && probs[i] > 0.0) return static_cast<NodeId>(i);
  }
  return static_cast<NodeId>(last_positive);
}

ActorCritic::ActorCritic(const Psn& psn, const Hyper& hyper, std::size_t gcn_width, std::size_t gcn_depth,
                         std::uint64_t seed)
    : hyper_(hyper),
      scale_(FeatureScale::from_psn(psn)),
      actor_(actor_spec(psn.node_count(), gcn_width, gcn_depth), Propagation::from_psn(psn), seed),
      critic_(critic_spec(psn.node_count(), gcn_width, gcn_depth), Propagation::from_psn(psn),
              seed ^ 0x9e3779b97f4a7c15ULL),
      actor_opt_(actor_.params(), hyper.actor_lr),
      critic_opt_(critic_.params(), hyper.critic_lr) {}

void ActorCritic::apply(std::vector<Matrix>& actor_grads, std::vector<Matrix>& critic_grads) {
  if (hyper_.grad_clip > 0.0) {
    clip_global_norm(actor_grads, hyper_.grad_clip);
    clip_global_norm(critic_grads, hyper_.grad_clip);
  }
  actor_opt_.step(actor_.params(), actor_grads);
  critic_opt_.step(critic_.params(), critic_grads);
}

ActionChoice select_action(const State& state, const Psn& psn, const Network& actor, const FeatureScale& scale,
                           const Hyper& hyper, Rng& rng) {
  ActionChoice c;
  c.features = encode(state, scale);
  c.trace = actor.forward(c.features);
  c.scores = c.trace.output;
  if (hyper.shaping) {
    c.preferred = heu_select(state, psn);
    c.probs = softmax(shape(c.scores, *c.preferred, hyper.xi, hyper.beta, hyper.eta));
  } else {
    c.probs = softmax(c.scores);
  }
  c.action = sample_categorical(c.probs, rng);
  c.log_prob = std::log(c.probs[static_cast<std::size_t>(c.action)]);
  return c;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

EpisodeGradients episode_gradients(const ActorCritic& nets, std::span<const StepRecord> steps) {
  const Hyper& hp = nets.hyper();
  EpisodeGradients g;
  g.actor = nets.actor().zero_grads();
  g.critic = nets.critic().zero_grads();

  std::vector<double> rewards;
  rewards.reserve(steps.size());
  for (const auto& s : steps) rewards.push_back(s.reward);
  g.returns = discounted_returns(rewards, hp.gamma);

  for (std::size_t t = 0; t < steps.size(); ++t) {
    const StepRecord& s = steps[t];
    const double advantage = g.returns[t] - s.value;
    const auto& pi = s.choice.probs;
    const auto a = static_cast<std::size_t>(s.choice.action);

    double entropy = 0.0;
    for (const double p : pi) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    g.actor_loss += -s.choice.log_prob * advantage - hp.entropy_coef * entropy;
    g.critic_loss += advantage * advantage;

    // d(loss)/dz' for the softmax over shaped scores.
    std::vector<double> d_shaped(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) {
      const double onehot = i == a ? 1.0 : 0.0;
      double d = -advantage * (onehot - pi[i]);
      if (hp.entropy_coef != 0.0 && pi[i] > 0.0) d += hp.entropy_coef * pi[i] * (std::log(pi[i]) + entropy);
      d_shaped[i] = d;
    }
    const std::vector<double> d_scores =
        s.choice.preferred ? shape_backward(s.choice.scores, *s.choice.preferred, hp.xi, hp.beta, hp.eta, d_shaped)
                           : d_shaped;
    nets.actor().backward(s.choice.features, s.choice.trace, d_scores, g.actor);

    const double d_value = -2.0 * advantage;
    nets.critic().backward(s.choice.features, s.critic_trace, std::span<const double>(&d_value, 1), g.critic);
  }
  return g;
}

EpisodeResult train_episode(PlacementEnv& env, const Nspr& nspr, ActorCritic& nets, Rng& rng) {
  env.reset(nspr);
  std::vector<StepRecord> steps;
  steps.reserve(static_cast<std::size_t>(nspr.vnf_count));
  while (env.active()) {
    StepRecord rec;
    rec.choice = select_action(env.state(), env.psn(), nets.actor(), nets.scale(), nets.hyper(), rng);
    rec.critic_trace = nets.critic().forward(rec.choice.features);
    rec.value = rec.critic_trace.output[0];
    const StepOutcome out = env.step(rec.choice.action);
    rec.reward = out.done ? normalize_reward(out.reward, nspr.vnf_count) : 0.0;
    steps.push_back(std::move(rec));
  }

  EpisodeGradients g = episode_gradients(nets, steps);
  nets.apply(g.actor, g.critic);

  EpisodeResult r;
  r.log = env.log();
  r.accepted = r.log.accepted;
  r.actor_loss = g.actor_loss;
  r.critic_loss = g.critic_loss;
  return r;
}

EpisodeResult heuristic_episode(PlacementEnv& env, const Nspr& nspr) {
  env.reset(nspr);
  while (env.active()) env.step(heu_select(env.state(), env.psn()));
  EpisodeResult r;
  r.log = env.log();
  r.accepted = r.log.accepted;
  return r;
}

}  // namespace nsp
