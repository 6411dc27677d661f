#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace antico {

using Currency = std::int64_t;
// expression templates off: keeps return-type deduction simple
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;

namespace economy {

// Exact utility value. Currency amounts are integers; shares such as M/N may
// not be, so the value is kept as a rational.
class Utility {
 public:
  Utility() = default;
  Utility(Rational v) : value_(std::move(v)) {}  // NOLINT(implicit)
  Utility(Currency v) : value_(v) {}             // NOLINT(implicit)

  const Rational& value() const { return value_; }
  double to_double() const { return value_.convert_to<double>(); }
  std::string str() const { return value_.str(); }

  friend Utility operator+(const Utility& a, const Utility& b) { return a.value_ + b.value_; }
  friend Utility operator-(const Utility& a, const Utility& b) { return a.value_ - b.value_; }
  friend Utility operator-(const Utility& a) { return Rational(-a.value_); }
  friend bool operator==(const Utility& a, const Utility& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Utility& a, const Utility& b) { return a.value_ != b.value_; }
  friend bool operator<(const Utility& a, const Utility& b) { return a.value_ < b.value_; }
  friend bool operator>(const Utility& a, const Utility& b) { return a.value_ > b.value_; }
  friend bool operator<=(const Utility& a, const Utility& b) { return a.value_ <= b.value_; }
  friend bool operator>=(const Utility& a, const Utility& b) { return a.value_ >= b.value_; }

 private:
  Rational value_{0};
};

struct EconomyParams {
  std::int64_t n_agents = 10;
  std::int64_t n_tasks = 1000;
  Currency task_reward = 100;
  Currency task_cost = 0;
  Currency honesty_deposit = 1000;
  Currency reporting_deposit = 1000;

  // Throws std::invalid_argument.
  void validate() const;
  Rational tasks_per_agent() const { return Rational(n_tasks, n_agents); }
};

struct CollusionPlan {
  std::int64_t group_size = 2;
  Rational extra_share = 0;
  Rational shirked_tasks = 0;
  Currency collateral = 0;

  void validate(const EconomyParams& p) const;
};

enum class Choice { Collude, Defect };
using StrategyProfile = std::vector<Choice>;

struct Dominance {
  bool dominates = false;
  Utility margin;  // (n-1)*D_h - u_coll
};

Utility honest_task_profit(const EconomyParams& p);
Utility honest_total_utility(const EconomyParams& p);
Utility collusion_total_utility(const EconomyParams& p, const CollusionPlan& plan);
Utility collusion_gain(const EconomyParams& p, const CollusionPlan& plan);
Rational worst_case_extra_share(const EconomyParams& p, std::int64_t n_coll);
Utility reporting_reward(std::int64_t n_coll, Currency d_h);
Rational min_honesty_deposit_full(const EconomyParams& p, std::int64_t n_coll, const Rational& k);
Rational min_honesty_deposit_conservative(const EconomyParams& p);
Currency min_collusion_collateral(Currency d_h, std::int64_t n_coll);
Dominance defection_dominates(const EconomyParams& p, const CollusionPlan& plan);

inline constexpr std::int64_t kMaxEnumerationGroup = 12;

// Per-player payoff in the collude/defect game given the player's own choice
// and how many of the *other* players defect.
Utility game_payoff(const EconomyParams& p, const CollusionPlan& plan, Choice own, std::int64_t other_defectors);

// All pure-strategy Nash equilibria (weak: no strictly profitable deviation).
std::vector<StrategyProfile> enumerate_equilibria(const EconomyParams& p, const CollusionPlan& plan);

Utility defamation_expected_utility(const Rational& p_acc, Currency r_rep, Currency d_h);

// Smallest integer >= r.
Currency ceil_currency(const Rational& r);

// Plan with S_coll = M/n_coll - M/N.
CollusionPlan worst_case_plan(const EconomyParams& p, std::int64_t n_coll, const Rational& k = 0);

}  // namespace economy
}  // namespace antico
