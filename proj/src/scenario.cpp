#include "nsp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nsp {

using nlohmann::json;
using nlohmann::ordered_json;

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? "invalid scenario" : errors.front()), errors_(std::move(errors)) {}

std::vector<double> Scenario::shares() const {
  std::vector<double> s;
  for (const auto& c : classes) s.push_back(c.load_share);
  return s;
}

LoadSchedule Scenario::load_schedule() const {
  return LoadSchedule::stair_step(schedule.baseline_load, shares(), schedule.rupture_episode(), schedule.delta_load);
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> errors;
  if (version != kScenarioVersion) errors.push_back("version: unsupported scenario version " + std::to_string(version));
  for (auto& e : topology.validate()) errors.push_back(std::move(e));

  if (classes.empty()) errors.emplace_back("classes: at least one class is required");
  double share_sum = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const std::string p = "classes[" + std::to_string(i) + "]";
    if (c.name.empty()) errors.push_back(p + ".name: must not be empty");
    if (c.vnf_count < 1) errors.push_back(p + ".vnf_count: must be >= 1");
    if (c.cpu <= 0) errors.push_back(p + ".cpu: must be > 0");
    if (c.ram <= 0) errors.push_back(p + ".ram: must be > 0");
    if (c.vnf_count > 1 && c.bw <= 0) errors.push_back(p + ".bw: must be > 0");
    if (!(c.mean_lifespan > 0.0) || !std::isfinite(c.mean_lifespan)) errors.push_back(p + ".mean_lifespan: must be > 0");
    if (!(c.load_share >= 0.0)) errors.push_back(p + ".load_share: must be >= 0");
    share_sum += c.load_share;
  }
  if (!classes.empty() && std::abs(share_sum - 1.0) > 1e-9) errors.emplace_back("classes: load shares must sum to 1");

  if (!(schedule.baseline_load >= 0.0) || !std::isfinite(schedule.baseline_load)) {
    errors.emplace_back("schedule.baseline_load: must be >= 0");
  }
  if (!(schedule.baseline_load + schedule.delta_load >= 0.0) || !std::isfinite(schedule.delta_load)) {
    errors.emplace_back("schedule.delta_load: load after the change must be >= 0");
  }
  if (schedule.phase_size < 1) errors.emplace_back("schedule.phase_size: must be >= 1");
  if (schedule.rupture_phase < 1) errors.emplace_back("schedule.rupture_phase: must be >= 1");

  if (training.budget < 0) errors.emplace_back("training.budget: must be >= 0");
  if (training.gcn_width < 1) errors.emplace_back("training.gcn_width: must be >= 1");
  if (training.gcn_depth < 1) errors.emplace_back("training.gcn_depth: must be >= 1");
  for (auto& e : training.hyper.validate()) errors.push_back(std::move(e));
  return errors;
}

namespace {

/// Walks one JSON object, reading known keys and remembering them so the
/// rest can be reported.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors, std::vector<std::string>& warnings)
      : obj_(obj), path_(std::move(path)), errors_(errors), warnings_(warnings) {
    if (!obj_.is_object()) errors_.push_back(path_ + ": must be an object");
  }

  ~Reader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) warnings_.push_back(where(key) + ": unknown key ignored");
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return type_error(key, "a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return type_error(key, "an integer");
    } else {
      if (!v.is_number()) return type_error(key, "a number");
    }
    out = v.get<T>();
  }

  /// Gbps in the file, integral Mbps in memory.
  void get_gbps(const std::string& key, Units& out) {
    double gbps = static_cast<double>(out) / static_cast<double>(kMbpsPerGbps);
    get(key, gbps);
    const double mbps = gbps * static_cast<double>(kMbpsPerGbps);
    if (!std::isfinite(mbps) || std::abs(mbps - std::round(mbps)) > 1e-6) {
      errors_.push_back(where(key) + ": must be a whole number of Mbps");
      return;
    }
    out = static_cast<Units>(std::llround(mbps));
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  void type_error(const std::string& key, const char* want) { errors_.push_back(where(key) + ": must be " + want); }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string>& warnings_;
  std::set<std::string> seen_;
};

void read_profile(const json& j, const std::string& path, DcProfile& p, std::vector<std::string>& errors,
                  std::vector<std::string>& warnings) {
  Reader r(j, path, errors, warnings);
  r.get("count", p.count);
  r.get("servers", p.servers);
  r.get_gbps("intra_bw_gbps", p.intra_bw);
  r.get_gbps("transport_bw_gbps", p.transport_bw);
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ordered_json gbps(Units mbps) {
  return static_cast<double>(mbps) / static_cast<double>(kMbpsPerGbps);
}

ordered_json profile_json(const DcProfile& p) {
  return ordered_json{{"count", p.count},
              {"servers", p.servers},
              {"intra_bw_gbps", gbps(p.intra_bw)},
              {"transport_bw_gbps", gbps(p.transport_bw)}};
}

}  // namespace

Scenario parse_scenario(const std::string& text, std::vector<std::string>& warnings) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError({"JSON syntax error at " + position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what()});
  }

  Scenario s;
  std::vector<std::string> errors;
  {
    Reader r(root, "", errors, warnings);
    r.get("version", s.version);

    if (const json* topo = r.child("topology")) {
      Reader t(*topo, "topology", errors, warnings);
      for (auto [key, profile] : {std::pair{"edc", &s.topology.edc}, std::pair{"cdc", &s.topology.cdc},
                                  std::pair{"ccp", &s.topology.ccp}}) {
        if (const json* pj = t.child(key)) read_profile(*pj, "topology." + std::string(key), *profile, errors, warnings);
      }
      t.get("server_cpu", s.topology.server_cpu);
      t.get("server_ram", s.topology.server_ram);
    }

    if (const json* classes = r.child("classes")) {
      if (!classes->is_array()) {
        errors.emplace_back("classes: must be an array");
      } else {
        s.classes.clear();
        for (std::size_t i = 0; i < classes->size(); ++i) {
          const std::string path = "classes[" + std::to_string(i) + "]";
          NsprClass c;
          c.load_share = 0.0;
          std::string graph = "chain";
          Reader cr((*classes)[i], path, errors, warnings);
          cr.get("name", c.name);
          cr.get("graph", graph);
          cr.get("vnf_count", c.vnf_count);
          cr.get("cpu", c.cpu);
          cr.get("ram", c.ram);
          cr.get_gbps("bw", c.bw);
          cr.get("mean_lifespan", c.mean_lifespan);
          cr.get("load_share", c.load_share);
          if (graph != "chain") errors.push_back(path + ".graph: only \"chain\" request graphs are supported");
          s.classes.push_back(std::move(c));
        }
      }
    }

    if (const json* sched = r.child("schedule")) {
      Reader sr(*sched, "schedule", errors, warnings);
      sr.get("baseline_load", s.schedule.baseline_load);
      sr.get("rupture_phase", s.schedule.rupture_phase);
      sr.get("delta_load", s.schedule.delta_load);
      sr.get("phase_size", s.schedule.phase_size);
    }

    if (const json* train = r.child("training")) {
      Reader tr(*train, "training", errors, warnings);
      auto& h = s.training.hyper;
      tr.get("budget", s.training.budget);
      tr.get("gcn_width", s.training.gcn_width);
      tr.get("gcn_depth", s.training.gcn_depth);
      tr.get("actor_lr", h.actor_lr);
      tr.get("critic_lr", h.critic_lr);
      tr.get("gamma", h.gamma);
      tr.get("xi", h.xi);
      tr.get("beta", h.beta);
      tr.get("eta", h.eta);
      tr.get("entropy_coef", h.entropy_coef);
      tr.get("grad_clip", h.grad_clip);
    }
  }

  for (auto& e : s.validate()) errors.push_back(std::move(e));
  if (!errors.empty()) throw ScenarioError(std::move(errors));

  static const std::set<double> kStudiedBetas{0.1, 0.5, 1.0, 2.0};
  if (!kStudiedBetas.contains(s.training.hyper.beta)) {
    warnings.push_back("training.beta: " + std::to_string(s.training.hyper.beta) +
                       " was not among the studied values 0.1, 0.5, 1, 2");
  }
  if (s.schedule.delta_load != 0.0 && (s.schedule.delta_load < 0.1 - 1e-12 || s.schedule.delta_load > 0.8 + 1e-12)) {
    warnings.emplace_back("schedule.delta_load: outside the studied 0.1-0.8 range");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, std::vector<std::string>& warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({"cannot open scenario file " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), warnings);
  } catch (const ScenarioError& e) {
    std::vector<std::string> errors;
    for (const auto& msg : e.errors()) errors.push_back(path.string() + ": " + msg);
    throw ScenarioError(std::move(errors));
  }
}

std::string dump_scenario(const Scenario& s) {
  ordered_json classes = ordered_json::array();
  for (const auto& c : s.classes) {
    classes.push_back(ordered_json{{"name", c.name},
                           {"graph", "chain"},
                           {"vnf_count", c.vnf_count},
                           {"cpu", c.cpu},
                           {"ram", c.ram},
                           {"bw", gbps(c.bw)},
                           {"mean_lifespan", c.mean_lifespan},
                           {"load_share", c.load_share}});
  }
  const auto& h = s.training.hyper;
  ordered_json root{
      {"version", s.version},
      {"topology",
       {{"edc", profile_json(s.topology.edc)},
        {"cdc", profile_json(s.topology.cdc)},
        {"ccp", profile_json(s.topology.ccp)},
        {"server_cpu", s.topology.server_cpu},
        {"server_ram", s.topology.server_ram}}},
      {"classes", classes},
      {"schedule",
       {{"baseline_load", s.schedule.baseline_load},
        {"rupture_phase", s.schedule.rupture_phase},
        {"delta_load", s.schedule.delta_load},
        {"phase_size", s.schedule.phase_size}}},
      {"training",
       {{"budget", s.training.budget},
        {"gcn_width", s.training.gcn_width},
        {"gcn_depth", s.training.gcn_depth},
        {"actor_lr", h.actor_lr},
        {"critic_lr", h.critic_lr},
        {"gamma", h.gamma},
        {"xi", h.xi},
        {"beta", h.beta},
        {"eta", h.eta},
        {"entropy_coef", h.entropy_coef},
        {"grad_clip", h.grad_clip}}},
  };
  return root.dump(2) + "\n";
}

Scenario reduced_scenario() {
  Scenario s;
  s.topology.edc = DcProfile{2, 2, 10 * kMbpsPerGbps, 10 * kMbpsPerGbps};
  s.topology.cdc = DcProfile{1, 4, 100 * kMbpsPerGbps, 100 * kMbpsPerGbps};
  s.topology.ccp = DcProfile{0, 0, 100 * kMbpsPerGbps, 100 * kMbpsPerGbps};
  s.schedule.rupture_phase = 12;
  s.training.budget = 10000;
  return s;
}

}  // namespace nsp
