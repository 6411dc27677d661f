#include "antico/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace antico::sim {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Baseline: return "Baseline";
    case Scenario::CNR: return "CNR";
    case Scenario::CVR: return "CVR";
    case Scenario::CMR: return "CMR";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(const std::string& s) {
  for (auto v : {Scenario::Baseline, Scenario::CNR, Scenario::CVR, Scenario::CMR}) {
    std::string name = to_string(v);
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == name || s == lower) return v;
  }
  return std::nullopt;
}

const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::Unassigned: return "unassigned";
    case TaskState::InProgress: return "in_progress";
    case TaskState::Completed: return "completed";
    case TaskState::Failed: return "failed";
  }
  return "?";
}

const char* to_string(Role r) {
  switch (r) {
    case Role::Honest: return "honest";
    case Role::Colluder: return "colluder";
    case Role::Whistleblower: return "whistleblower";
    case Role::MaliciousReporter: return "malicious_reporter";
  }
  return "?";
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::JoinCollusion: return "join";
    case Decision::Refuse: return "refuse";
    case Decision::Defect: return "defect";
  }
  return "?";
}

namespace {
[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument(field + ": " + why);
}
}  // namespace

void SimConfig::validate() const {
  if (n_agents < 2) bad("n_agents", "need at least 2 agents");
  if (n_ticks < 1) bad("n_ticks", "must be positive");
  if (n_task_types < 1) bad("n_task_types", "must be positive");
  if (static_cast<int>(task_durations.size()) != n_task_types)
    bad("task_durations", "need one duration per task type");
  for (Tick d : task_durations)
    if (d < 1) bad("task_durations", "durations must be positive");
  if (task_reward < 0) bad("task_reward", "must be non-negative");
  if (task_cost < 0 || task_cost > task_reward) bad("task_cost", "must lie in [0, task_reward]");
  if (honesty_deposit < 0) bad("honesty_deposit", "must be non-negative");
  if (reporting_deposit < 0) bad("reporting_deposit", "must be non-negative");
  if (group_min < 2 || group_max < group_min || group_max > n_agents)
    bad("group_min", "need 2 <= group_min <= group_max <= n_agents");
  if (group_size != 0 && (group_size < 2 || group_size > n_agents)) bad("group_size", "must be 0 or in [2, n_agents]");
  if (!(temperature >= 0) || !std::isfinite(temperature)) bad("temperature", "must be finite and >= 0");
  if (replicas < 1) bad("replicas", "must be positive");
  if (collusion_start < 0 || collusion_lead < 0) bad("collusion_start", "must be non-negative");
  if (verifier.window < 1) bad("window", "must be positive");
  if (!(verifier.monopoly_threshold >= 0 && verifier.monopoly_threshold <= 1))
    bad("monopoly_threshold", "must lie in [0, 1]");
  if (!(verifier.blocking_threshold >= 0)) bad("blocking_threshold", "must be non-negative");
  if (verifier.min_evidence_claims < 1) bad("min_evidence_claims", "must be positive");
  if (!(report_risk >= 0 && report_risk <= 1)) bad("report_risk", "must lie in [0, 1]");
  if (offer_share_max < 1) bad("offer_share_max", "must be positive");
  if (collusion_collateral < 0) bad("collusion_collateral", "must be non-negative");
  if (utility_scale < 1) bad("utility_scale", "must be positive");
  if (initial_cash < task_cost * (confirm_latency + 1)) bad("initial_cash", "must cover task costs until rewards confirm");
  if (confirm_latency < 0 || confirm_latency > 5) bad("confirm_latency", "must lie in [0, 5]");
  if (malicious_reporters < 0) bad("malicious_reporters", "must be non-negative");
  if (scenario == Scenario::CVR || scenario == Scenario::CMR) {
    if (collusion_start + collusion_lead + verifier.window + 1 >= n_ticks)
      bad("collusion_start", "verification window runs past the episode");
    if (scenario == Scenario::CMR && malicious_reporters > collusion_lead)
      bad("malicious_reporters", "every report must arrive before the collusion starts");
  }
  if (scenario == Scenario::CMR) {
    int max_group = group_size ? group_size : group_max;
    if (n_agents - max_group < std::max(malicious_reporters, max_group))
      bad("malicious_reporters", "not enough non-colluders to defame");
  }
}

economy::EconomyParams SimConfig::economy() const {
  economy::EconomyParams p;
  p.n_agents = n_agents;
  p.n_tasks = n_ticks;
  p.task_reward = task_reward;
  p.task_cost = task_cost;
  p.honesty_deposit = honesty_deposit;
  p.reporting_deposit = reporting_deposit;
  return p;
}

bool CollusionGroup::contains(AgentId a) const {
  return std::find(members.begin(), members.end(), a) != members.end();
}

WorldState make_world(const SimConfig& cfg, std::uint64_t arrival_seed, std::uint64_t order_seed) {
  WorldState w;
  w.arrivals = Rng(arrival_seed);
  w.order = Rng(order_seed);
  w.tasks.reserve(static_cast<std::size_t>(cfg.n_ticks));
  for (int i = 0; i < cfg.n_agents; ++i) {
    AgentState a;
    a.id = i;
    a.temperature = cfg.temperature;
    w.agents.push_back(a);
  }
  for (int s = 0; s < cfg.n_task_types; ++s) w.stations.push_back(Station{s, {}, -1});
  w.log.begin = 0;
  w.log.end = -1;
  return w;
}

std::vector<AgentId> apply_resource_monopoly(WorldState& w, std::vector<AgentId> idle) {
  w.order.shuffle(std::span<AgentId>(idle));
  if (!w.group || !w.group->active) return idle;
  std::stable_partition(idle.begin(), idle.end(), [&](AgentId a) { return w.group->contains(a); });
  return idle;
}

int apply_spatial_blocking(WorldState& w) {
  for (auto& s : w.stations) s.occupant = -1;
  if (!w.group || !w.group->active || w.group->behavior != CollusionBehavior::SpatialBlocking) return -1;
  AgentState& b = w.agents[w.group->blocker];
  if (b.current_task >= 0 || b.withdrawn) return -1;
  int best = 0;
  for (const auto& s : w.stations)
    if (s.pending.size() > w.stations[best].pending.size()) best = s.id;
  w.stations[best].occupant = b.id;
  b.position = best;
  w.log.events.push_back({w.tick, b.id, protocol::ActionKind::Occupy, -1, best, false, false, true});
  return best;
}

std::vector<Completion> step(WorldState& w, const SimConfig& cfg) {
  const Tick t = w.tick;
  // (1) arrival
  {
    Task task;
    task.id = static_cast<int>(w.tasks.size());
    task.type = static_cast<int>(w.arrivals.below(static_cast<std::uint64_t>(cfg.n_task_types)));
    task.duration = cfg.task_durations[task.type];
    task.reward = cfg.task_reward;
    task.station = task.type;
    task.created = t;
    w.stations[task.station].pending.push_back(task.id);
    w.tasks.push_back(std::move(task));
  }

  // (2) collusion hooks, then claims
  apply_spatial_blocking(w);
  const bool active = w.group && w.group->active;
  const bool blocking = active && w.group->behavior == CollusionBehavior::SpatialBlocking;

  std::vector<AgentId> idle;
  for (const auto& a : w.agents)
    if (a.current_task < 0 && !a.withdrawn) idle.push_back(a.id);
  idle = apply_resource_monopoly(w, std::move(idle));

  std::vector<int> emptied_by_group;
  for (AgentId id : idle) {
    const bool coll = active && w.group->contains(id);
    if (blocking && id == w.group->blocker) continue;
    AgentState& a = w.agents[id];
    a.position = -1;

    int chosen = -1;
    Tick min_dur = 0;
    Tick first_dur = -1;
    bool contested = false;
    for (const auto& s : w.stations) {
      if (s.pending.empty()) continue;
      if (s.occupant >= 0 && !coll) continue;
      const Tick d = cfg.task_durations[s.id];
      if (first_dur < 0) first_dur = d, min_dur = d;
      if (d != first_dur) contested = true;
      min_dur = std::min(min_dur, d);
      if (chosen < 0) {
        chosen = s.id;
        continue;
      }
      const int head = s.pending.front();
      const int cur = w.stations[chosen].pending.front();
      // Pool tasks carry no queue, so the priority rule reduces to task id.
      const bool better = coll ? std::pair(d, head) < std::pair(cfg.task_durations[chosen], cur) : head < cur;
      if (better) chosen = s.id;
    }
    if (chosen < 0) continue;

    if (coll) {
      for (int s : emptied_by_group)
        if (cfg.task_durations[s] < cfg.task_durations[chosen]) {
          w.log.events.push_back({t, id, protocol::ActionKind::Defer, -1, s, false, false, true});
          break;
        }
    }
    Station& st = w.stations[chosen];
    const int tid = st.pending.front();
    st.pending.pop_front();
    if (coll && st.pending.empty()) emptied_by_group.push_back(chosen);
    Task& task = w.tasks[tid];
    task.queue.push_back(id);
    task.state = TaskState::InProgress;
    task.assigned = t;
    a.current_task = tid;
    a.remaining = task.duration;
    a.position = chosen;
    w.log.events.push_back({t, id, protocol::ActionKind::Claim, tid, chosen, contested,
                            cfg.task_durations[chosen] == min_dur, coll});
  }

  // (3) progress
  std::vector<Completion> done;
  for (auto& a : w.agents) {
    if (a.current_task < 0) continue;
    if (--a.remaining > 0) continue;
    Task& task = w.tasks[a.current_task];
    task.state = TaskState::Completed;
    task.completed = t + 1;
    a.task_income += task.reward - cfg.task_cost;
    ++a.completed;
    done.push_back({a.id, task.id});
    a.current_task = -1;
    a.position = -1;
  }
  w.log.end = t;
  ++w.tick;
  return done;
}

// ---- decisions ----

DecisionInputs decision_inputs(const SimConfig& cfg, std::int64_t group_size, std::int64_t extra_share) {
  DecisionInputs in;
  in.economy = cfg.economy();
  in.plan.group_size = group_size;
  in.plan.extra_share = extra_share;
  in.plan.shirked_tasks = 0;
  in.plan.collateral = cfg.collusion_collateral;
  in.temperature = cfg.temperature;
  in.ablation = cfg.ablation;
  in.report_risk = Rational(cfg.report_risk);
  in.utility_scale = cfg.utility_scale;
  return in;
}

OptionValues option_utilities(const DecisionInputs& in) {
  const Currency d_h = in.ablation.deposit ? 0 : in.economy.honesty_deposit;
  OptionValues v;
  v.refuse = Currency{0};
  v.join = economy::collusion_gain(in.economy, in.plan) - economy::Utility(Rational(in.report_risk * d_h));
  economy::Utility reward = in.ablation.incentive ? economy::Utility(Currency{0})
                                                  : economy::reporting_reward(in.plan.group_size, d_h);
  // Without anonymity the defector is exposed to the group's retaliation.
  economy::Utility retaliation = in.ablation.anonymity ? economy::Utility(in.plan.collateral) : economy::Utility(Currency{0});
  v.defect = reward - retaliation;
  return v;
}

std::array<double, 3> choice_probabilities(const DecisionInputs& in) {
  auto v = option_utilities(in);
  std::array<double, 3> u{v.join.to_double(), v.refuse.to_double(), v.defect.to_double()};
  std::array<double, 3> p{0, 0, 0};
  if (in.temperature == 0) {
    // argmax; ties favour defect, then refuse
    int best = 2;
    if (v.refuse > v.defect) best = 1;
    const auto& top = best == 2 ? v.defect : v.refuse;
    if (v.join > top) best = 0;
    p[best] = 1;
    return p;
  }
  const double scale = static_cast<double>(in.utility_scale) * in.temperature;
  const double m = std::max({u[0], u[1], u[2]});
  double z = 0;
  for (int i = 0; i < 3; ++i) z += p[i] = std::exp((u[i] - m) / scale);
  for (auto& x : p) x /= z;
  return p;
}

Decision agent_decide(const DecisionInputs& in, double u) {
  auto p = choice_probabilities(in);
  if (u < p[0]) return Decision::JoinCollusion;
  if (u < p[0] + p[1] || p[2] == 0) return Decision::Refuse;
  return Decision::Defect;
}

Decision agent_decide(const DecisionInputs& in, Rng& rng) { return agent_decide(in, rng.unit()); }

}  // namespace antico::sim
