#include "antico/episode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace antico::sim {

namespace {

enum Stream : std::uint64_t { kArrivals = 1, kOrder, kRoles, kDecisions, kEntropy };

using contract::Address;

struct Cast {
  std::vector<AgentId> members;
  AgentId whistleblower = -1;
  std::vector<AgentId> defamers;
  std::vector<std::vector<AgentId>> defamed;
  std::int64_t offer = 0;
};

Cast draw_cast(const SimConfig& cfg, Rng& rng) {
  Cast c;
  std::vector<AgentId> ids(static_cast<std::size_t>(cfg.n_agents));
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(std::span<AgentId>(ids));
  const int n = cfg.group_size ? cfg.group_size : static_cast<int>(rng.between(cfg.group_min, cfg.group_max));
  c.offer = rng.between(1, cfg.offer_share_max);
  const auto wb = rng.below(static_cast<std::uint64_t>(n));
  if (cfg.scenario == Scenario::Baseline) return c;
  c.members.assign(ids.begin(), ids.begin() + n);
  if (cfg.scenario == Scenario::CNR) return c;
  c.whistleblower = c.members[wb];
  if (cfg.scenario != Scenario::CMR) return c;
  std::vector<AgentId> outsiders(ids.begin() + n, ids.end());
  for (int k = 0; k < cfg.malicious_reporters; ++k) {
    const AgentId d = outsiders[static_cast<std::size_t>(k)];
    std::vector<AgentId> pool;
    for (AgentId a : outsiders)
      if (a != d) pool.push_back(a);
    rng.shuffle(std::span<AgentId>(pool));
    std::vector<AgentId> accused{d};
    accused.insert(accused.end(), pool.begin(), pool.begin() + (n - 1));
    std::sort(accused.begin(), accused.end());
    c.defamers.push_back(d);
    c.defamed.push_back(std::move(accused));
  }
  return c;
}

struct Reporter {
  AgentId agent;
  bool truthful;
  protocol::BuiltReport built;
  contract::ContractId contract;
  Address anon;
  protocol::Evidence evidence;
  int stage = 0;
  Tick stage_tick = 0;
};

}  // namespace

std::uint64_t replica_seed(const SimConfig& cfg, std::uint64_t replica) { return mix_seed(cfg.seed, replica); }

MetricsReport compute_metrics(const WorldState& w, std::optional<double> baseline_reference) {
  MetricsReport m;
  m.total_tasks = static_cast<int>(w.tasks.size());
  double proc = 0;
  for (const auto& t : w.tasks) {
    switch (t.state) {
      case TaskState::Completed:
        ++m.completed;
        proc += static_cast<double>(t.completed - t.assigned);
        break;
      case TaskState::Failed: ++m.failed; break;
      case TaskState::Unassigned: ++m.unassigned; break;
      case TaskState::InProgress: ++m.in_progress; break;
    }
  }
  m.completion_rate = m.total_tasks ? static_cast<double>(m.completed) / m.total_tasks : 0.0;
  const int finished = m.completed + m.failed;
  m.success_rate = finished ? static_cast<double>(m.completed) / finished : 1.0;
  m.avg_processing_time = m.completed ? proc / m.completed : 0.0;
  for (const auto& a : w.agents) {
    m.roles.push_back(a.role);
    m.revenue.push_back(a.task_income);
  }
  if (baseline_reference)
    for (Currency r : m.revenue) m.advantage.push_back(static_cast<double>(r) - *baseline_reference);
  m.group_size = w.group ? static_cast<int>(w.group->members.size()) : 0;
  return m;
}

double baseline_mean_revenue(const SimConfig& cfg, std::uint64_t replica) {
  SimConfig b = cfg;
  b.scenario = Scenario::Baseline;
  auto r = run_episode(b, replica);
  const auto& rev = r.metrics.revenue;
  return static_cast<double>(std::accumulate(rev.begin(), rev.end(), Currency{0})) / static_cast<double>(rev.size());
}

EpisodeResult run_episode(const SimConfig& cfg, std::uint64_t replica, const EpisodeOptions& opts) {
  cfg.validate();
  const std::uint64_t seed = replica_seed(cfg, replica);
  const bool reporting = cfg.scenario == Scenario::CVR || cfg.scenario == Scenario::CMR;
  if (reporting && cfg.honesty_deposit <= 0) throw std::invalid_argument("honesty_deposit: reporting scenarios need a positive deposit");
  const Tick L = cfg.confirm_latency;
  const Currency d_h = cfg.honesty_deposit;
  const int N = cfg.n_agents;

  EpisodeResult res;
  WorldState& w = res.world;
  w = make_world(cfg, mix_seed(seed, kArrivals), mix_seed(seed, kOrder));
  Rng roles(mix_seed(seed, kRoles));
  Rng decide(mix_seed(seed, kDecisions));

  // Setup runs in negative ticks so bonds are confirmed when tick 0 starts.
  contract::Ledger ledger(contract::LedgerConfig{L, L}, -2 * L);
  const Address mgr_addr = Address::manager();
  const Address mixer = Address::mixer();
  ledger.open_account(mgr_addr);
  ledger.open_account(mixer);
  ledger.open_account(Address::sink());
  const Currency endowment = 2 * d_h + cfg.initial_cash;
  const Currency float_ = reporting ? (1 + cfg.malicious_reporters) * static_cast<Currency>(N) * d_h : 0;
  if (float_ > 0) ledger.mint(mgr_addr, float_);
  for (int i = 0; i < N; ++i) {
    ledger.open_account(Address::agent(i));
    if (endowment > 0) ledger.mint(Address::agent(i), endowment);
  }
  ledger.advance_to(-L);
  std::vector<std::optional<contract::BondId>> bonds(static_cast<std::size_t>(N));
  if (d_h > 0)
    for (int i = 0; i < N; ++i) bonds[i] = ledger.lock_bond(Address::agent(i), d_h);
  ledger.advance_to(0);

  std::optional<crypto::Entropy> ent;
  std::optional<protocol::Manager> mgr;
  std::vector<crypto::KeyPair> keys;
  std::vector<crypto::Point> pks;
  if (reporting) {
    ent.emplace(mix_seed(seed, kEntropy));
    auto mkeys = crypto::keygen(ent->bytes(32));
    mgr.emplace(mkeys, ledger, mgr_addr, d_h, cfg.verifier);
    for (int i = 0; i < N; ++i) {
      keys.push_back(crypto::keygen(ent->bytes(32)));
      pks.push_back(keys.back().public_key);
      mgr->register_agent(i, pks.back(), bonds[i]);
    }
  }

  MetricsReport& m = res.metrics;
  const Cast cast = draw_cast(cfg, roles);
  int invited = 0, joined = 0;
  if (!cast.members.empty()) {
    const auto in = decision_inputs(cfg, static_cast<std::int64_t>(cast.members.size()), cast.offer);
    for (std::size_t i = 0; i < cast.members.size(); ++i) {
      ++invited;
      if (agent_decide(in, decide.unit()) == Decision::JoinCollusion) ++joined;
    }
  }

  auto form_group = [&](bool active) {
    CollusionGroup g;
    g.members = cast.members;
    g.behavior = cfg.behavior;
    g.blocker = cast.members.front();
    g.active = active;
    w.group = std::move(g);
    for (AgentId a : cast.members) w.agents[a].role = Role::Colluder;
  };
  if (cfg.scenario == Scenario::CNR) form_group(true);

  std::vector<Reporter> reporters;
  int verified = 0;
  const Tick tf = cfg.collusion_start;
  const Tick t_coll = tf + cfg.collusion_lead;
  auto file_report = [&](AgentId agent, bool truthful, const std::vector<AgentId>& accused, Tick t) {
    auto built = protocol::build_report(keys[agent], static_cast<std::int64_t>(accused.size()), t_coll, pks,
                                        mgr->public_key(), *ent);
    auto r = mgr->receive_report(built.submission, t);
    if (!r.accepted) throw std::logic_error(std::string("report rejected: ") + protocol::to_string(r.reason));
    ++m.report_count;
    protocol::Evidence ev{cfg.behavior, accused, t_coll};
    std::sort(ev.accused.begin(), ev.accused.end());
    Address anon = ledger.wb(*r.contract).reporter;
    ledger.transfer(Address::agent(agent), mixer, d_h);
    reporters.push_back(Reporter{agent, truthful, std::move(built), *r.contract, anon, std::move(ev), 0, t});
  };

  auto advance_reporters = [&](Tick t) {
    for (auto& r : reporters) {
      for (bool moved = true; moved;) {
        moved = false;
        switch (r.stage) {
          case 0:
            if (t >= r.stage_tick + L) {
              ledger.transfer(mixer, r.anon, d_h);
              moved = true;
            }
            break;
          case 1:
            if (t >= r.stage_tick + L && ledger.wb(r.contract).state == contract::WbState::Funded) {
              ledger.submit_reporting_deposit(r.contract, r.anon, d_h);
              moved = true;
            }
            break;
          case 2:
            if (t >= r.stage_tick + L) {
              auto sub = protocol::build_evidence(r.built.state, r.contract, r.evidence, mgr->public_key(), *ent);
              mgr->receive_evidence(sub, t);
              moved = true;
            }
            break;
          case 3:
            if (t == r.evidence.report_time + cfg.verifier.window + 1) {
              auto out = mgr->verify_evidence(r.contract, w.log);
              auto s = mgr->enforce(r.contract, out);
              res.outcomes.push_back(out);
              if (s.rewarded) ++verified;
              if (s.rewarded && !r.truthful) ++m.defamations_accepted;
              if (r.truthful && w.group) w.group->active = false;
              moved = true;
            }
            break;
          default: break;
        }
        if (moved) {
          ++r.stage;
          r.stage_tick = t;
        }
      }
    }
  };

  for (Tick t = 0; t < cfg.n_ticks; ++t) {
    if (reporting) {
      if (t == tf) {
        form_group(false);
        w.agents[cast.whistleblower].role = Role::Whistleblower;
        file_report(cast.whistleblower, true, cast.members, t);
      }
      for (std::size_t k = 0; k < cast.defamers.size(); ++k)
        if (t == tf + static_cast<Tick>(k) + 1) {
          w.agents[cast.defamers[k]].role = Role::MaliciousReporter;
          file_report(cast.defamers[k], false, cast.defamed[k], t);
        }
      if (t == t_coll && w.group) {
        w.group->active = true;
        if (cfg.mass_withdrawal)
          for (AgentId a : w.group->members) {
            if (a == cast.whistleblower || !bonds[a]) continue;
            ledger.refund_bond(*bonds[a]);
            w.agents[a].withdrawn = true;
          }
      }
      advance_reporters(t);
    }
    for (const auto& c : step(w, cfg)) {
      const Address who = Address::agent(c.agent);
      if (cfg.task_reward > 0) ledger.mint(who, cfg.task_reward);
      if (cfg.task_cost > 0) ledger.transfer(who, Address::sink(), cfg.task_cost);
    }
    ledger.advance_to(t + 1);
  }

  // Group surplus is split equally among members.
  if (cfg.scenario == Scenario::CNR && w.group) {
    std::vector<AgentId> mem = w.group->members;
    std::sort(mem.begin(), mem.end());
    Currency total = 0;
    for (AgentId a : mem) total += w.agents[a].task_income;
    const auto n = static_cast<Currency>(mem.size());
    std::vector<std::pair<AgentId, Currency>> over, under;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const Currency target = total / n + (static_cast<Currency>(i) < total % n ? 1 : 0);
      const Currency diff = w.agents[mem[i]].task_income - target;
      if (diff > 0) over.emplace_back(mem[i], diff);
      if (diff < 0) under.emplace_back(mem[i], -diff);
    }
    std::size_t i = 0, j = 0;
    while (i < over.size() && j < under.size()) {
      const Currency amt = std::min(over[i].second, under[j].second);
      ledger.transfer(Address::agent(over[i].first), Address::agent(under[j].first), amt);
      if ((over[i].second -= amt) == 0) ++i;
      if ((under[j].second -= amt) == 0) ++j;
    }
  }
  for (const auto& b : bonds)
    if (b && ledger.bond(*b).status == contract::BondStatus::Locked) ledger.refund_bond(*b);
  ledger.settle_all();
  ledger.check_invariants();

  std::optional<double> base = opts.baseline_mean;
  const bool is_baseline = cfg.scenario == Scenario::Baseline;
  res.metrics = compute_metrics(w, std::nullopt);
  m.report_count = static_cast<int>(reporters.size());
  m.verified_count = verified;
  m.invited = invited;
  m.joined = joined;
  m.collusion_rate = invited ? static_cast<double>(joined) / invited : 0.0;
  m.defamations_accepted = 0;
  for (const auto& r : reporters) {
    if (r.truthful) continue;
    const auto& c = ledger.wb(r.contract);
    if (c.state == contract::WbState::ResolvedValid) ++m.defamations_accepted;
  }
  for (int i = 0; i < N; ++i) {
    Currency v = ledger.balance(Address::agent(i)) - endowment;
    for (const auto& r : reporters)
      if (r.agent == i) v += ledger.balance(r.anon);
    m.revenue[i] = v;
  }
  if (is_baseline && !base)
    base = static_cast<double>(std::accumulate(m.revenue.begin(), m.revenue.end(), Currency{0})) / N;
  if (!base) base = baseline_mean_revenue(cfg, replica);
  for (Currency r : m.revenue) m.advantage.push_back(static_cast<double>(r) - *base);
  res.manager_delta = ledger.balance(mgr_addr) - float_;

  if (opts.keep_transcript) {
    std::map<std::string, std::string> header{{"scenario", to_string(cfg.scenario)},
                                              {"behavior", protocol::to_string(cfg.behavior)},
                                              {"seed", std::to_string(cfg.seed)},
                                              {"replica", std::to_string(replica)},
                                              {"group_size", std::to_string(cast.members.size())}};
    static const std::vector<protocol::ProtocolStep> none;
    res.transcript = make_transcript(std::move(header), mgr ? mgr->steps() : none, ledger);
  }
  return res;
}

}  // namespace antico::sim
