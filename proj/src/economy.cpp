#include "antico/economy.hpp"

#include <stdexcept>

namespace antico::economy {

void EconomyParams::validate() const {
  if (n_agents < 2) throw std::invalid_argument("n_agents must be >= 2");
  if (n_tasks < 1) throw std::invalid_argument("n_tasks must be >= 1");
  if (task_cost < 0) throw std::invalid_argument("task_cost must be >= 0");
  if (task_reward <= task_cost) throw std::invalid_argument("task_reward must exceed task_cost");
  if (honesty_deposit < 0 || reporting_deposit < 0) throw std::invalid_argument("deposits must be >= 0");
}

void CollusionPlan::validate(const EconomyParams& p) const {
  if (group_size < 2 || group_size > p.n_agents)
    throw std::invalid_argument("group_size must be in [2, n_agents]");
  if (extra_share < 0) throw std::invalid_argument("extra_share must be >= 0");
  if (shirked_tasks < 0) throw std::invalid_argument("shirked_tasks must be >= 0");
  if (shirked_tasks > p.tasks_per_agent() + extra_share)
    throw std::invalid_argument("shirked_tasks exceeds allocated tasks");
  if (collateral < 0) throw std::invalid_argument("collateral must be >= 0");
}

Utility honest_task_profit(const EconomyParams& p) {
  p.validate();
  return p.task_reward - p.task_cost;
}

Utility honest_total_utility(const EconomyParams& p) {
  p.validate();
  return Rational(p.tasks_per_agent() * (p.task_reward - p.task_cost));
}

Utility collusion_total_utility(const EconomyParams& p, const CollusionPlan& plan) {
  p.validate();
  plan.validate(p);
  const Rational allocated = p.tasks_per_agent() + plan.extra_share;
  const Rational executed = allocated - plan.shirked_tasks;
  if (executed < 0) throw std::invalid_argument("executed task count is negative");
  return Rational(allocated * p.task_reward - executed * p.task_cost);
}

Utility collusion_gain(const EconomyParams& p, const CollusionPlan& plan) {
  p.validate();
  plan.validate(p);
  return Rational(plan.extra_share * (p.task_reward - p.task_cost) + plan.shirked_tasks * p.task_cost);
}

Rational worst_case_extra_share(const EconomyParams& p, std::int64_t n_coll) {
  p.validate();
  if (n_coll < 2 || n_coll > p.n_agents) throw std::invalid_argument("n_coll must be in [2, n_agents]");
  return Rational(p.n_tasks, n_coll) - p.tasks_per_agent();
}

Utility reporting_reward(std::int64_t n_coll, Currency d_h) {
  if (n_coll < 2) throw std::invalid_argument("reporting needs at least one co-conspirator");
  if (d_h < 0) throw std::invalid_argument("deposit must be >= 0");
  return (n_coll - 1) * d_h;
}

Rational min_honesty_deposit_full(const EconomyParams& p, std::int64_t n_coll, const Rational& k) {
  const Rational s = worst_case_extra_share(p, n_coll);
  const Rational profit = p.task_reward - p.task_cost;
  return ((p.tasks_per_agent() + s) * profit + k * p.task_cost) / (n_coll - 1);
}

Rational min_honesty_deposit_conservative(const EconomyParams& p) {
  p.validate();
  return Rational(p.n_tasks, 2) * (p.task_reward - p.task_cost);
}

Currency min_collusion_collateral(Currency d_h, std::int64_t n_coll) {
  if (n_coll < 2) throw std::invalid_argument("n_coll must be >= 2");
  return d_h * (n_coll - 1);
}

Dominance defection_dominates(const EconomyParams& p, const CollusionPlan& plan) {
  const Utility coll = collusion_total_utility(p, plan);
  const Utility reward = reporting_reward(plan.group_size, p.honesty_deposit);
  Dominance d;
  d.margin = reward - coll;
  d.dominates = d.margin > Utility(0);
  return d;
}

Utility game_payoff(const EconomyParams& p, const CollusionPlan& plan, Choice own, std::int64_t other_defectors) {
  const std::int64_t n = plan.group_size;
  if (other_defectors < 0 || other_defectors > n - 1) throw std::invalid_argument("defector count out of range");
  const Currency d_h = p.honesty_deposit;
  if (own == Choice::Collude) {
    if (other_defectors == 0) return collusion_total_utility(p, plan);
    return -d_h;
  }
  // One winner among d defectors takes the pool of the other n-1 deposits;
  // every defector, winner included, loses its own bond.
  const std::int64_t d = other_defectors + 1;
  const Rational win = Rational((n - 1) * d_h);
  const Rational lose = Rational(-d_h);
  return Rational((win + (d - 1) * lose) / d);
}

std::vector<StrategyProfile> enumerate_equilibria(const EconomyParams& p, const CollusionPlan& plan) {
  p.validate();
  plan.validate(p);
  const std::int64_t n = plan.group_size;
  if (n > kMaxEnumerationGroup) throw std::invalid_argument("group too large for exhaustive enumeration");

  // table[c][d]: payoff of choice c when d others defect
  std::vector<Utility> collude(n), defect(n);
  for (std::int64_t d = 0; d < n; ++d) {
    collude[d] = game_payoff(p, plan, Choice::Collude, d);
    defect[d] = game_payoff(p, plan, Choice::Defect, d);
  }

  std::vector<StrategyProfile> out;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    const std::int64_t defectors = __builtin_popcount(mask);
    bool stable = true;
    for (std::int64_t i = 0; i < n && stable; ++i) {
      const bool is_defector = (mask >> i) & 1u;
      const std::int64_t others = defectors - (is_defector ? 1 : 0);
      if (is_defector)
        stable = !(collude[others] > defect[others]);
      else
        stable = !(defect[others] > collude[others]);
    }
    if (!stable) continue;
    StrategyProfile prof(n);
    for (std::int64_t i = 0; i < n; ++i) prof[i] = ((mask >> i) & 1u) ? Choice::Defect : Choice::Collude;
    out.push_back(std::move(prof));
  }
  return out;
}

Utility defamation_expected_utility(const Rational& p_acc, Currency r_rep, Currency d_h) {
  if (p_acc < 0 || p_acc > 1) throw std::invalid_argument("p_acc must be in [0, 1]");
  return Rational(p_acc * r_rep - (1 - p_acc) * d_h);
}

Currency ceil_currency(const Rational& r) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  cpp_int q = num / den;
  if (num % den != 0 && num > 0) q += 1;
  return q.convert_to<Currency>();
}

CollusionPlan worst_case_plan(const EconomyParams& p, std::int64_t n_coll, const Rational& k) {
  CollusionPlan plan;
  plan.group_size = n_coll;
  plan.extra_share = worst_case_extra_share(p, n_coll);
  plan.shirked_tasks = k;
  return plan;
}

}  // namespace antico::economy
