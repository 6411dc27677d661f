#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "antico/economy.hpp"
#include "antico/protocol.hpp"
#include "antico/rng.hpp"

namespace antico::sim {

using protocol::AgentId;
using protocol::CollusionBehavior;
using contract::Tick;

enum class Scenario { Baseline, CNR, CVR, CMR };
const char* to_string(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& s);

struct Ablation {
  bool anonymity = false;
  bool incentive = false;
  bool deposit = false;
};

struct SimConfig {
  int n_agents = 10;
  Tick n_ticks = 1000;
  int n_task_types = 5;
  std::vector<Tick> task_durations{8, 11, 14, 17, 20};
  Currency task_reward = 100;
  Currency task_cost = 0;
  Currency honesty_deposit = 1000;
  Currency reporting_deposit = 1000;
  int group_min = 2;
  int group_max = 5;
  int group_size = 0;  // 0 draws from [group_min, group_max] per replica
  Scenario scenario = Scenario::Baseline;
  CollusionBehavior behavior = CollusionBehavior::ResourceMonopoly;
  double temperature = 0.0;
  Ablation ablation;
  std::uint64_t seed = 1;
  int replicas = 1000;

  // group formation tick for CVR/CMR, and the delay before it acts
  Tick collusion_start = 100;
  Tick collusion_lead = 5;
  protocol::VerifierConfig verifier;

  // decision model
  double report_risk = 0.5;      // chance a colluder expects to be reported
  int offer_share_max = 40;      // extra tasks offered, drawn from [1, max]
  Currency collusion_collateral = 1000;
  Currency utility_scale = 1000;

  Currency initial_cash = 1000;
  Tick confirm_latency = 1;
  int malicious_reporters = 2;
  bool mass_withdrawal = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  economy::EconomyParams economy() const;
};

enum class TaskState { Unassigned, InProgress, Completed, Failed };
const char* to_string(TaskState s);

struct Task {
  int id = 0;
  int type = 0;
  Tick duration = 1;
  Currency reward = 0;
  int station = 0;
  std::vector<AgentId> queue;
  TaskState state = TaskState::Unassigned;
  Tick created = 0;
  Tick assigned = -1;
  Tick completed = -1;
};

enum class Role { Honest, Colluder, Whistleblower, MaliciousReporter };
const char* to_string(Role r);

struct AgentState {
  AgentId id = 0;
  Role role = Role::Honest;
  int current_task = -1;
  Tick remaining = 0;
  int position = -1;  // station, or -1 when idle
  double temperature = 0.0;
  Currency task_income = 0;  // rewards minus costs
  int completed = 0;
  bool withdrawn = false;
};

struct Station {
  int id = 0;
  std::deque<int> pending;
  AgentId occupant = -1;
};

struct CollusionGroup {
  std::vector<AgentId> members;
  CollusionBehavior behavior = CollusionBehavior::ResourceMonopoly;
  AgentId blocker = -1;
  bool active = false;

  bool contains(AgentId a) const;
};

struct Completion {
  AgentId agent;
  int task;
};

struct WorldState {
  Tick tick = 0;
  std::vector<Task> tasks;
  std::vector<AgentState> agents;
  std::vector<Station> stations;
  std::optional<CollusionGroup> group;
  protocol::BehaviorLog log;
  Rng arrivals{0};
  Rng order{0};
};

WorldState make_world(const SimConfig& cfg, std::uint64_t arrival_seed, std::uint64_t order_seed);

// One tick: arrival, collusion hooks, claims, progress. Returns the tasks
// finished this tick; payment is left to the caller.
std::vector<Completion> step(WorldState& w, const SimConfig& cfg);

// Claim order for this tick: active colluders first, each block shuffled.
std::vector<AgentId> apply_resource_monopoly(WorldState& w, std::vector<AgentId> idle);
// Places the blocker on the busiest station; returns it, or -1.
int apply_spatial_blocking(WorldState& w);

// ---- decisions ----

enum class Decision { JoinCollusion, Refuse, Defect };
const char* to_string(Decision d);

struct DecisionInputs {
  economy::EconomyParams economy;
  economy::CollusionPlan plan;
  double temperature = 0.0;
  Ablation ablation;
  Rational report_risk{1, 2};
  Currency utility_scale = 1000;
};

struct OptionValues {
  economy::Utility join;
  economy::Utility refuse;
  economy::Utility defect;
};

// Utilities relative to staying honest.
OptionValues option_utilities(const DecisionInputs& in);
// Probabilities in the order join, refuse, defect.
std::array<double, 3> choice_probabilities(const DecisionInputs& in);
Decision agent_decide(const DecisionInputs& in, double u);
Decision agent_decide(const DecisionInputs& in, Rng& rng);

DecisionInputs decision_inputs(const SimConfig& cfg, std::int64_t group_size, std::int64_t extra_share);

}  // namespace antico::sim
