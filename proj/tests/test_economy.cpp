#include <doctest.h>

#include <numeric>
#include <set>

#include "antico/economy.hpp"
#include "antico/rng.hpp"

using namespace antico;
using namespace antico::economy;

namespace {

// Independent fraction oracle on __int128, reduced by gcd.
struct Frac {
  __int128 n, d;
  Frac(__int128 num = 0, __int128 den = 1) : n(num), d(den) {
    if (d < 0) n = -n, d = -d;
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) n /= a, d /= a;
  }
  friend Frac operator+(Frac a, Frac b) { return {a.n * b.d + b.n * a.d, a.d * b.d}; }
  friend Frac operator-(Frac a, Frac b) { return {a.n * b.d - b.n * a.d, a.d * b.d}; }
  friend Frac operator*(Frac a, Frac b) { return {a.n * b.n, a.d * b.d}; }
  friend Frac operator/(Frac a, Frac b) { return {a.n * b.d, a.d * b.n}; }
  friend bool operator==(Frac a, Frac b) { return a.n == b.n && a.d == b.d; }
  friend bool operator<(Frac a, Frac b) { return a.n * b.d < b.n * a.d; }
};

Rational to_rational(Frac f) {
  return Rational(static_cast<long long>(f.n), static_cast<long long>(f.d));
}

bool same(const Utility& u, Frac f) { return u.value() == to_rational(f); }
bool same(const Rational& r, Frac f) { return r == to_rational(f); }

EconomyParams params(std::int64_t n, std::int64_t m, Currency r, Currency c, Currency dh = 1000) {
  EconomyParams p;
  p.n_agents = n;
  p.n_tasks = m;
  p.task_reward = r;
  p.task_cost = c;
  p.honesty_deposit = dh;
  p.reporting_deposit = dh;
  return p;
}

EconomyParams random_params(Rng& rng) {
  EconomyParams p;
  p.n_agents = rng.between(2, 40);
  p.n_tasks = rng.between(1, 5000);
  p.task_cost = rng.between(0, 500);
  p.task_reward = p.task_cost + rng.between(1, 500);
  p.honesty_deposit = rng.between(0, 100000);
  p.reporting_deposit = p.honesty_deposit;
  return p;
}

// Oracle payoff: expectation over an explicit uniform winner among defectors.
Frac oracle_payoff(Frac u_coll, std::int64_t n, Currency dh, bool defect, std::int64_t others) {
  if (!defect) return others == 0 ? u_coll : Frac(-dh);
  const std::int64_t d = others + 1;
  Frac total = 0;
  for (std::int64_t winner = 0; winner < d; ++winner) {
    // the player is index 0 among defectors
    total = total + (winner == 0 ? Frac((n - 1) * dh) : Frac(-dh));
  }
  return total / Frac(d);
}

std::set<std::vector<int>> oracle_equilibria(Frac u_coll, std::int64_t n, Currency dh) {
  std::set<std::vector<int>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::int64_t defectors = __builtin_popcount(mask);
    bool ok = true;
    for (std::int64_t i = 0; i < n; ++i) {
      bool is_d = (mask >> i) & 1u;
      std::int64_t others = defectors - is_d;
      Frac stay = oracle_payoff(u_coll, n, dh, is_d, others);
      Frac dev = oracle_payoff(u_coll, n, dh, !is_d, others);
      if (stay < dev) ok = false;
    }
    if (!ok) continue;
    std::vector<int> prof(n);
    for (std::int64_t i = 0; i < n; ++i) prof[i] = (mask >> i) & 1u;
    out.insert(prof);
  }
  return out;
}

std::set<std::vector<int>> as_set(const std::vector<StrategyProfile>& eq) {
  std::set<std::vector<int>> out;
  for (const auto& prof : eq) {
    std::vector<int> v;
    for (Choice c : prof) v.push_back(c == Choice::Defect ? 1 : 0);
    out.insert(v);
  }
  return out;
}

}  // namespace

TEST_CASE("honest task profit") {
  CHECK(honest_task_profit(params(10, 1000, 100, 40)) == Utility(60));
  CHECK(honest_task_profit(params(10, 1000, 100, 0)) == Utility(100));
  CHECK(honest_task_profit(params(10, 1000, 100, 99)) == Utility(1));
  CHECK_THROWS_AS(honest_task_profit(params(10, 1000, 100, 100)), std::invalid_argument);
  CHECK_THROWS_AS(honest_task_profit(params(1, 1000, 100, 0)), std::invalid_argument);
}

TEST_CASE("honest total utility keeps M/N exact") {
  CHECK(honest_total_utility(params(10, 1000, 100, 40)) == Utility(6000));
  CHECK(honest_total_utility(params(10, 10, 100, 40)) == Utility(60));
  CHECK(honest_total_utility(params(10, 1000, 100, 0)) == Utility(10000));
  CHECK(same(honest_total_utility(params(3, 1000, 100, 40)), Frac(1000, 3) * Frac(60)));
}

TEST_CASE("collusion total utility and gain") {
  auto p = params(10, 1000, 100, 40);
  CollusionPlan plan;
  plan.group_size = 2;
  plan.extra_share = 400;
  CHECK(collusion_total_utility(p, plan) == Utility(30000));
  CHECK(collusion_gain(p, plan) == Utility(24000));
  plan.shirked_tasks = 100;
  CHECK(collusion_total_utility(p, plan) == Utility(34000));
  CHECK(collusion_gain(p, plan) == Utility(24000 + 4000));
  plan.extra_share = 0;
  plan.shirked_tasks = 0;
  CHECK(collusion_total_utility(p, plan) == honest_total_utility(p));
  CHECK(collusion_gain(p, plan) == Utility(0));

  plan.shirked_tasks = 101;  // more than the 100 allocated
  CHECK_THROWS_AS(collusion_total_utility(p, plan), std::invalid_argument);
  plan.shirked_tasks = 0;
  plan.group_size = 11;
  CHECK_THROWS_AS(collusion_total_utility(p, plan), std::invalid_argument);
}

TEST_CASE("property: gain identity and positivity over random params") {
  Rng rng(11);
  for (int i = 0; i < 3000; ++i) {
    auto p = random_params(rng);
    CollusionPlan plan;
    plan.group_size = rng.between(2, p.n_agents);
    plan.extra_share = Rational(rng.between(0, 3000), rng.between(1, 7));
    Rational cap = p.tasks_per_agent() + plan.extra_share;
    plan.shirked_tasks = cap * Rational(rng.between(0, 100), 100);
    Utility gain = collusion_gain(p, plan);
    CHECK(gain == collusion_total_utility(p, plan) - honest_total_utility(p));
    if (plan.extra_share > 0 || (plan.shirked_tasks > 0 && p.task_cost > 0)) CHECK(gain > Utility(0));

    // integer oracle for the deposit bound
    Frac s = Frac(static_cast<long long>(boost::multiprecision::numerator(plan.extra_share)),
                  static_cast<long long>(boost::multiprecision::denominator(plan.extra_share)));
    Frac k = Frac(static_cast<long long>(boost::multiprecision::numerator(plan.shirked_tasks)),
                  static_cast<long long>(boost::multiprecision::denominator(plan.shirked_tasks)));
    Frac mn(p.n_tasks, p.n_agents);
    Frac expect = (mn + s) * Frac(p.task_reward) - (mn + s - k) * Frac(p.task_cost);
    CHECK(same(collusion_total_utility(p, plan), expect));
  }
}

TEST_CASE("worst case extra share") {
  auto p = params(10, 1000, 100, 40);
  CHECK(worst_case_extra_share(p, 2) == Rational(400));
  CHECK(worst_case_extra_share(p, 10) == Rational(0));
  CHECK(same(worst_case_extra_share(p, 3), Frac(700, 3)));
  CHECK_THROWS_AS(worst_case_extra_share(p, 1), std::invalid_argument);
  CHECK_THROWS_AS(worst_case_extra_share(p, 11), std::invalid_argument);
}

TEST_CASE("reporting reward and collateral") {
  CHECK(reporting_reward(3, 1000) == Utility(2000));
  CHECK(reporting_reward(2, 1000) == Utility(1000));
  CHECK(reporting_reward(5, 1000) == Utility(4000));
  CHECK_THROWS_AS(reporting_reward(1, 1000), std::invalid_argument);
  CHECK(min_collusion_collateral(1000, 3) == 2000);
  CHECK(min_collusion_collateral(0, 7) == 0);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::int64_t n = rng.between(2, 50);
    Currency dh = rng.between(0, 1000000);
    CHECK(reporting_reward(n, dh) == Utility(min_collusion_collateral(dh, n)));
  }
}

TEST_CASE("deposit bounds") {
  auto p = params(10, 1000, 100, 40);
  CHECK(min_honesty_deposit_full(p, 2, 0) == Rational(30000));
  CHECK(same(min_honesty_deposit_full(p, 10, 0), Frac(6000, 9)));
  CHECK(ceil_currency(min_honesty_deposit_full(p, 10, 0)) == 667);
  CHECK(min_honesty_deposit_full(p, 2, 100) == Rational(34000));
  CHECK(min_honesty_deposit_conservative(p) == Rational(30000));
  CHECK(min_honesty_deposit_conservative(p) == min_honesty_deposit_full(p, 2, 0));
  CHECK(ceil_currency(Rational(5)) == 5);
  CHECK(ceil_currency(Rational(-7, 2)) == -3);
}

TEST_CASE("property: conservative bound dominates the full bound") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto p = random_params(rng);
    Rational cons = min_honesty_deposit_conservative(p);
    CHECK(cons == min_honesty_deposit_full(p, 2, 0));
    for (std::int64_t n = 3; n <= p.n_agents; ++n) CHECK(cons >= min_honesty_deposit_full(p, n, 0));
    // oracle: M/(n(n-1)) * profit
    std::int64_t n = rng.between(2, p.n_agents);
    Frac expect = Frac(p.n_tasks, n * (n - 1)) * Frac(p.task_reward - p.task_cost);
    CHECK(same(min_honesty_deposit_full(p, n, 0), expect));
  }
}

TEST_CASE("defection dominance") {
  auto p = params(10, 1000, 100, 40, 30000);
  auto plan = worst_case_plan(p, 2);
  // exactly at the bound the inequality is not strict
  auto at_bound = defection_dominates(p, plan);
  CHECK_FALSE(at_bound.dominates);
  CHECK(at_bound.margin == Utility(0));
  p.honesty_deposit = 30001;
  auto above = defection_dominates(p, plan);
  CHECK(above.dominates);
  CHECK(above.margin == Utility(1));

  p.honesty_deposit = 0;
  CHECK_FALSE(defection_dominates(p, plan).dominates);
}

TEST_CASE("equilibria: examples") {
  auto p = params(10, 1000, 100, 40);
  auto plan = worst_case_plan(p, 3);
  p.honesty_deposit = ceil_currency(min_honesty_deposit_full(p, 3, 0)) + 1;
  auto eq = enumerate_equilibria(p, plan);
  REQUIRE(eq.size() == 1);
  CHECK(eq[0] == StrategyProfile(3, Choice::Defect));

  p.honesty_deposit = 0;
  eq = enumerate_equilibria(p, plan);
  bool has_all_collude = false;
  for (auto& e : eq) has_all_collude |= e == StrategyProfile(3, Choice::Collude);
  CHECK(has_all_collude);

  // n=2 at exact indifference: u_coll == D_h
  auto p2 = params(10, 1000, 100, 40, 30000);
  eq = enumerate_equilibria(p2, worst_case_plan(p2, 2));
  CHECK(as_set(eq) == std::set<std::vector<int>>{{0, 0}, {1, 1}});

  CollusionPlan big;
  big.group_size = 13;
  auto p3 = params(20, 1000, 100, 40);
  CHECK_THROWS_AS(enumerate_equilibria(p3, big), std::invalid_argument);
}

TEST_CASE("property: equilibria match the lottery oracle") {
  Rng rng(17);
  for (int i = 0; i < 400; ++i) {
    auto p = random_params(rng);
    p.n_agents = rng.between(2, 12);
    CollusionPlan plan;
    plan.group_size = rng.between(2, p.n_agents);
    plan.extra_share = rng.between(0, 300);
    Utility uc = collusion_total_utility(p, plan);
    // exercise exact ties too
    if (rng.below(4) == 0) p.honesty_deposit = rng.between(0, 50);
    Frac u(static_cast<long long>(boost::multiprecision::numerator(uc.value())),
           static_cast<long long>(boost::multiprecision::denominator(uc.value())));
    CHECK(as_set(enumerate_equilibria(p, plan)) == oracle_equilibria(u, plan.group_size, p.honesty_deposit));
  }
}

TEST_CASE("defamation expected utility") {
  CHECK(defamation_expected_utility(Rational(1, 100), 2000, 1000) == Utility(-970));
  CHECK(defamation_expected_utility(0, 2000, 1000) == Utility(-1000));
  CHECK(defamation_expected_utility(1, 2000, 1000) == Utility(2000));
  CHECK_THROWS_AS(defamation_expected_utility(Rational(3, 2), 2000, 1000), std::invalid_argument);

  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    Currency r = rng.between(0, 100000), dh = rng.between(1, 100000);
    Rational threshold(dh, dh + r);
    Rational pa = threshold * Rational(rng.between(0, 999), 1000);
    CHECK(defamation_expected_utility(pa, r, dh) < Utility(0));
  }
}

TEST_CASE("reward exceeds worst-case collusion utility above the bound") {
  Rng rng(29);
  for (int i = 0; i < 2000; ++i) {
    auto p = random_params(rng);
    std::int64_t n = rng.between(2, p.n_agents);
    p.honesty_deposit = ceil_currency(min_honesty_deposit_full(p, n, 0)) + 1;
    CHECK(reporting_reward(n, p.honesty_deposit) > collusion_total_utility(p, worst_case_plan(p, n)));
  }
}
