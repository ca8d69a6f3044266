#include "nsp/env.hpp"

#include "json.hpp"

namespace nsp {

double normalize_reward(double raw, int vnf_count) {
  if (raw > 0.0) return raw * 10.0 / (200.0 * vnf_count);
  return raw / 10.0;
}

void write_json_line(std::ostream& out, const EpisodeLog& log) {
  nlohmann::json j;
  j["nspr"] = log.nspr_id;
  j["class"] = log.nspr_class;
  j["actions"] = log.actions;
  auto deltas = nlohmann::json::array();
  for (const auto& d : log.deltas) deltas.push_back({d.acceptance, d.load_balance, d.consumption});
  j["deltas"] = std::move(deltas);
  j["hops"] = log.hops;
  j["raw_reward"] = log.raw_reward;
  j["reward"] = log.reward;
  j["accepted"] = log.accepted;
  out << j.dump() << '\n';
}

const State& PlacementEnv::reset(const Nspr& nspr) {
  nspr_ = nspr;
  record_ = PlacementRecord{};
  record_.nspr_id = nspr.id;
  log_ = EpisodeLog{};
  log_.nspr_id = nspr.id;
  log_.nspr_class = nspr.class_name;

  const auto n = psn_->node_count();
  state_ = State{};
  state_.chi.assign(n, 0);
  state_.vnf_index = 1;
  state_.vnf_count = nspr.vnf_count;
  state_.req_cpu = nspr.cpu;
  state_.req_ram = nspr.ram;
  active_ = true;
  refresh_state();
  return state_;
}

void PlacementEnv::refresh_state() {
  const auto n = psn_->node_count();
  state_.cpu.resize(n);
  state_.ram.resize(n);
  state_.bw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = psn_->node(static_cast<NodeId>(i));
    state_.cpu[i] = node.cpu;
    state_.ram[i] = node.ram;
    state_.bw[i] = psn_->node_bw(static_cast<NodeId>(i));
  }
  state_.remaining = nspr_.vnf_count - state_.vnf_index + 1;
  state_.req_bw = nspr_.incident_bw(state_.vnf_index - 1);
  state_.vl_bw = state_.vnf_index > 1 ? nspr_.vl_bw : 0;
}

void PlacementEnv::fail(StepOutcome& out) {
  out.deltas = StepDeltas{-100.0, 0.0, 1.0};
  out.reward = -100.0;
  out.done = true;
  out.accepted = false;
  out.success = false;
  psn_->release(record_);
  active_ = false;
  refresh_state();
}

StepOutcome PlacementEnv::step(NodeId action) {
  if (!active_) throw std::logic_error("step on a finished episode");
  if (action < 0 || static_cast<std::size_t>(action) >= psn_->node_count()) {
    throw std::out_of_range("action is not a node id");
  }

  StepOutcome out;
  log_.actions.push_back(action);
  const Node& target = psn_->node(action);
  const bool first = state_.vnf_index == 1;

  std::optional<Path> path;
  bool ok = target.is_server() && target.cpu >= nspr_.cpu && target.ram >= nspr_.ram;
  if (ok && !first) {
    path = shortest_feasible_path(*psn_, *state_.prev_host, action, nspr_.vl_bw);
    ok = path.has_value();
  }

  if (!ok) {
    fail(out);
  } else {
    std::vector<PathDemand> demand;
    if (!first) demand.push_back(PathDemand{*path, nspr_.vl_bw});
    psn_->allocate(action, nspr_.cpu, nspr_.ram, demand);
    record_.hosts.push_back(action);
    record_.vnf_cpu.push_back(nspr_.cpu);
    record_.vnf_ram.push_back(nspr_.ram);
    if (!first) {
      record_.vl_paths.push_back(*path);
      record_.vl_bw.push_back(nspr_.vl_bw);
    }

    const Node& placed = psn_->node(action);
    out.hops = first ? 0 : path->hops();
    out.deltas.acceptance = 100.0;
    out.deltas.load_balance = static_cast<double>(placed.cpu) / static_cast<double>(placed.cpu_max) +
                              static_cast<double>(placed.ram) / static_cast<double>(placed.ram_max);
    out.deltas.consumption = out.hops == 0 ? 1.0 : 1.0 / static_cast<double>(out.hops);
    out.success = true;

    state_.chi[static_cast<std::size_t>(action)] += 1;
    state_.prev_host = action;
    if (state_.vnf_index == nspr_.vnf_count) {
      double total = 0.0;
      for (const auto& d : log_.deltas) total += d.acceptance * d.load_balance * d.consumption;
      total += out.deltas.acceptance * out.deltas.load_balance * out.deltas.consumption;
      out.reward = total;
      out.done = true;
      out.accepted = true;
      record_.complete = true;
      active_ = false;
    } else {
      state_.vnf_index += 1;
      out.reward = 0.0;
    }
    refresh_state();
  }

  log_.deltas.push_back(out.deltas);
  log_.hops.push_back(out.hops);
  if (out.done) {
    log_.raw_reward = out.reward;
    log_.reward = normalize_reward(out.reward, nspr_.vnf_count);
    log_.accepted = out.accepted;
  }
  return out;
}

PlacementRecord PlacementEnv::take_record() {
  if (!record_.complete) throw std::logic_error("no accepted placement to take");
  PlacementRecord out = std::move(record_);
  record_ = PlacementRecord{};
  return out;
}

void on_departure(Psn& psn, PlacementRecord& record) {
  psn.release(record);
}

}  // namespace nsp
