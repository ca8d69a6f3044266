#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nsp/env.hpp"
#include "nsp/neural.hpp"
#include "nsp/rng.hpp"

namespace nsp {

struct Hyper {
  double actor_lr = 5e-5;
  double critic_lr = 1.25e-3;
  double gamma = 0.99;
  double xi = 1.0;
  double beta = 2.0;
  double eta = 0.0;
  double entropy_coef = 0.0;
  double grad_clip = 1.0;  ///< global-norm clip per network; <= 0 disables
  bool shaping = false;

  std::vector<std::string> validate() const;
  bool operator==(const Hyper&) const = default;
};

/// Divisors that bring every resource channel into [0, 1]: the largest
/// per-node maximum of each resource over the substrate.
struct FeatureScale {
  double cpu = 1.0;
  double ram = 1.0;
  double bw = 1.0;

  static FeatureScale from_psn(const Psn& psn);
};

/// Node channels (cpu, ram, bw, chi) and NSPR branch (req_cpu, req_ram,
/// req_bw, remaining), resources divided by the scale, chi and remaining
/// by |V|.
Features encode(const State& state, const FeatureScale& scale);

/// First index of the maximum.
std::size_t argmax(std::span<const double> z);

/// Heuristic boost of the preferred action's score:
///   H = z[argmax] - z[a*] + eta,  z'[a*] = z[a*] + xi * H^beta,
/// all other entries unchanged.
std::vector<double> shape(std::span<const double> z, NodeId preferred, double xi, double beta, double eta);

/// Vector-Jacobian product of `shape`: d(loss)/dz from d(loss)/dz'.
/// The argmax index is treated as fixed; where H^(beta-1) is unbounded
/// (H = 0, beta < 1) the boost contributes no gradient.
std::vector<double> shape_backward(std::span<const double> z, NodeId preferred, double xi, double beta, double eta,
                                   std::span<const double> d_shaped);

/// Index drawn from a categorical distribution.
NodeId sample_categorical(std::span<const double> probs, Rng& rng);

/// Actor and critic with their optimizers, sized for one substrate.
class ActorCritic {
 public:
  ActorCritic(const Psn& psn, const Hyper& hyper, std::size_t gcn_width, std::size_t gcn_depth, std::uint64_t seed);

  Network& actor() { return actor_; }
  const Network& actor() const { return actor_; }
  Network& critic() { return critic_; }
  const Network& critic() const { return critic_; }
  const Hyper& hyper() const { return hyper_; }
  const FeatureScale& scale() const { return scale_; }

  void apply(std::vector<Matrix>& actor_grads, std::vector<Matrix>& critic_grads);

 private:
  Hyper hyper_;
  FeatureScale scale_;
  Network actor_;
  Network critic_;
  Adam actor_opt_;
  Adam critic_opt_;
};

struct ActionChoice {
  NodeId action = 0;
  double log_prob = 0.0;
  std::vector<double> probs;
  std::vector<double> scores;          ///< actor output Z
  std::optional<NodeId> preferred;     ///< a*, when shaping
  Features features;
  Trace trace;
};

/// Samples from softmax of the (shaped, if enabled) actor scores.
ActionChoice select_action(const State& state, const Psn& psn, const Network& actor, const FeatureScale& scale,
                           const Hyper& hyper, Rng& rng);

/// One executed step, as needed for the update.
struct StepRecord {
  ActionChoice choice;
  Trace critic_trace;
  double value = 0.0;
  double reward = 0.0;  ///< normalized
};

struct EpisodeGradients {
  std::vector<Matrix> actor;
  std::vector<Matrix> critic;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  std::vector<double> returns;
};

/// Monte-Carlo returns R_t = sum_k gamma^k r_{t+k+1} for a terminated episode.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// Actor loss  -sum_t log pi'(a_t) (R_t - v_t) - c * entropy(pi'_t)
/// critic loss  sum_t (R_t - v_t)^2
/// with pi' the executed (shaped) policy. Gradients are unclipped.
EpisodeGradients episode_gradients(const ActorCritic& nets, std::span<const StepRecord> steps);

struct EpisodeResult {
  EpisodeLog log;
  bool accepted = false;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

/// Places `nspr` with the current policy, then applies one actor and one
/// critic update.
EpisodeResult train_episode(PlacementEnv& env, const Nspr& nspr, ActorCritic& nets, Rng& rng);

/// Places `nspr` with the heuristic alone.
EpisodeResult heuristic_episode(PlacementEnv& env, const Nspr& nspr);

}  // namespace nsp
