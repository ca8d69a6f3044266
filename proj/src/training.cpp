#include "nsp/training.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "nsp/load.hpp"

namespace nsp {

const char* to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Drl: return "drl";
    case AgentKind::Hadrl: return "hadrl";
    case AgentKind::Heu: return "heu";
  }
  return "?";
}

std::optional<AgentKind> parse_agent(const std::string& name) {
  if (name == "drl") return AgentKind::Drl;
  if (name == "hadrl") return AgentKind::Hadrl;
  if (name == "heu") return AgentKind::Heu;
  return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed and stream index
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Hyper RunSpec::hyper() const {
  Hyper h = scenario.training.hyper;
  h.shaping = agent == AgentKind::Hadrl;
  return h;
}

double RunSpec::beta() const {
  return agent == AgentKind::Hadrl ? scenario.training.hyper.beta : 0.0;
}

namespace {

enum Stream : std::uint64_t { kEvents = 0, kNetworks = 1, kPolicy = 2 };

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_checkpoints(const std::filesystem::path& dir, const ActorCritic& nets, int phase, bool keep) {
  std::string suffix;
  if (keep) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_phase%04d", phase);
    suffix = buf;
  }
  for (auto [name, net] : {std::pair{"actor", &nets.actor()}, std::pair{"critic", &nets.critic()}}) {
    const auto path = dir / (std::string(name) + suffix + ".ckpt");
    // write-then-rename so an interrupted run never leaves a torn file
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      save_checkpoint(out, *net);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }
}

}  // namespace

RunResult run_training(const RunSpec& spec) {
  const Scenario& sc = spec.scenario;
  if (auto errors = sc.validate(); !errors.empty()) throw ScenarioError(std::move(errors));

  Psn psn = build_reference_psn(sc.topology);
  const auto schedule = sc.load_schedule();
  const std::int64_t budget = sc.training.budget;
  const auto events = generate_events(schedule, sc.classes, psn.total_cpu_max(), budget,
                                      derive_seed(spec.seed, kEvents));

  RunResult result;
  const bool learning = spec.agent != AgentKind::Heu;
  if (learning) {
    result.nets.emplace(psn, spec.hyper(), static_cast<std::size_t>(sc.training.gcn_width),
                        static_cast<std::size_t>(sc.training.gcn_depth), derive_seed(spec.seed, kNetworks));
  }
  Rng policy_rng(derive_seed(spec.seed, kPolicy));

  std::ofstream phase_out;
  std::ofstream episode_out;
  std::filesystem::path ckpt_dir;
  if (spec.out_dir) {
    std::filesystem::create_directories(*spec.out_dir);
    write_file(*spec.out_dir / "scenario.json", dump_scenario(sc));
    phase_out.open(*spec.out_dir / "phases.csv", std::ios::binary | std::ios::trunc);
    if (!phase_out) throw std::runtime_error("cannot write " + (*spec.out_dir / "phases.csv").string());
    write_phase_csv_header(phase_out);
    if (spec.episode_log) {
      episode_out.open(*spec.out_dir / "episodes.jsonl", std::ios::binary | std::ios::trunc);
      if (!episode_out) throw std::runtime_error("cannot write episodes.jsonl");
    }
    if (learning) {
      ckpt_dir = *spec.out_dir / "checkpoints";
      std::filesystem::create_directories(ckpt_dir);
    }
  }

  PlacementEnv env(psn);
  std::unordered_map<std::int64_t, PlacementRecord> live;
  const auto phase_size = static_cast<std::size_t>(sc.schedule.phase_size);
  result.accepted.reserve(static_cast<std::size_t>(budget));
  int phase_accepted = 0;

  for (const auto& ev : events) {
    if (static_cast<std::int64_t>(result.accepted.size()) >= budget) break;
    if (ev.kind == EventKind::Departure) {
      if (auto it = live.find(ev.nspr_id); it != live.end()) {
        on_departure(psn, it->second);
        live.erase(it);
      }
      continue;
    }

    const auto cls = static_cast<std::size_t>(ev.class_index);
    const Nspr nspr = make_nspr(sc.classes[cls], ev.class_index, ev.nspr_id, ev.time, ev.lifespan);
    const EpisodeResult ep =
        learning ? train_episode(env, nspr, *result.nets, policy_rng) : heuristic_episode(env, nspr);
    if (ep.accepted) live.emplace(nspr.id, env.take_record());
    result.accepted.push_back(ep.accepted ? 1 : 0);
    phase_accepted += ep.accepted ? 1 : 0;
    if (episode_out.is_open()) write_json_line(episode_out, ep.log);

    if (result.accepted.size() % phase_size == 0) {
      const int phase = static_cast<int>(result.accepted.size() / phase_size) - 1;
      PhaseRow row;
      row.run_id = spec.run_id;
      row.agent = to_string(spec.agent);
      row.beta = spec.beta();
      row.seed = spec.seed;
      row.phase = phase;
      row.accepted = phase_accepted;
      row.tar = static_cast<double>(phase_accepted) / static_cast<double>(phase_size);
      row.load_target = schedule.at(static_cast<std::int64_t>(phase) * sc.schedule.phase_size).load;
      phase_accepted = 0;
      if (phase_out.is_open()) {
        write_phase_csv(phase_out, std::span<const PhaseRow>(&row, 1));
        phase_out.flush();
      }
      if (learning && !ckpt_dir.empty()) write_checkpoints(ckpt_dir, *result.nets, phase, spec.keep_checkpoints);
      result.phases.push_back(std::move(row));
    }
  }
  if (phase_out.is_open() && !phase_out) throw std::runtime_error("error writing phases.csv");
  return result;
}

}  // namespace nsp
