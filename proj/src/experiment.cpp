#include "antico/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace antico::exp {

using sim::Scenario;

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

namespace {

// Calls fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure by index.
template <class Fn>
void parallel_for(int n, int jobs, Fn fn) {
  jobs = std::min(resolve_jobs(jobs), std::max(n, 1));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_at = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) failed_at = i, failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double mean_revenue(const MetricsReport& m) {
  if (m.revenue.empty()) return 0;
  return static_cast<double>(std::accumulate(m.revenue.begin(), m.revenue.end(), Currency{0})) /
         static_cast<double>(m.revenue.size());
}

std::string num(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string collusion_type(const SimConfig& cfg) {
  if (cfg.scenario == Scenario::Baseline) return "No Collusion";
  return cfg.behavior == sim::CollusionBehavior::ResourceMonopoly ? "Resource Monopoly" : "Spatial Blocking";
}

void write_summary_header(std::ostream& out) {
  for (const auto& c : metric_columns()) out << ',' << c << "_mean," << c << "_std";
  out << '\n';
}

void write_summary(std::ostream& out, const Aggregate& a) {
  for (const auto& c : metric_columns()) {
    const auto& s = a.metrics.at(c);
    out << ',' << num(s.mean) << ',' << num(s.std);
  }
  out << '\n';
}

}  // namespace

std::vector<MetricsReport> run_replicas(const SimConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const int n = cfg.replicas;
  if (opts.baseline_means && static_cast<int>(opts.baseline_means->size()) < n)
    throw std::invalid_argument("baseline means cover fewer replicas than requested");
  std::vector<MetricsReport> out(static_cast<std::size_t>(n));
  parallel_for(n, opts.jobs, [&](int i) {
    sim::EpisodeOptions eo;
    if (opts.baseline_means) eo.baseline_mean = (*opts.baseline_means)[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = sim::run_episode(cfg, static_cast<std::uint64_t>(i), eo).metrics;
  });
  return out;
}

std::vector<double> baseline_means(const SimConfig& cfg, int jobs) {
  SimConfig b = cfg;
  b.scenario = Scenario::Baseline;
  auto reports = run_replicas(b, {jobs, nullptr});
  std::vector<double> means;
  means.reserve(reports.size());
  for (const auto& m : reports) means.push_back(mean_revenue(m));
  return means;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1));
  }
  return s;
}

const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols = {
      "total_tasks",     "completed_tasks", "failed_tasks",        "unassigned_tasks",
      "in_progress_tasks", "completion_rate", "success_rate", "avg_processing_time",
      "report_count",    "verified_count"};
  return cols;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = [] {
    auto c = table_columns();
    c.insert(c.end(), {"collusion_rate", "group_size", "defamations_accepted"});
    return c;
  }();
  return cols;
}

double metric_value(const MetricsReport& m, const std::string& column) {
  if (column == "total_tasks") return m.total_tasks;
  if (column == "completed_tasks") return m.completed;
  if (column == "failed_tasks") return m.failed;
  if (column == "unassigned_tasks") return m.unassigned;
  if (column == "in_progress_tasks") return m.in_progress;
  if (column == "completion_rate") return m.completion_rate;
  if (column == "success_rate") return m.success_rate;
  if (column == "avg_processing_time") return m.avg_processing_time;
  if (column == "report_count") return m.report_count;
  if (column == "verified_count") return m.verified_count;
  if (column == "collusion_rate") return m.collusion_rate;
  if (column == "group_size") return m.group_size;
  if (column == "defamations_accepted") return m.defamations_accepted;
  throw std::invalid_argument("unknown metric column '" + column + "'");
}

Aggregate aggregate(const std::vector<MetricsReport>& reports) {
  Aggregate a;
  a.replicas = static_cast<int>(reports.size());
  for (const auto& c : metric_columns()) {
    std::vector<double> xs;
    xs.reserve(reports.size());
    for (const auto& m : reports) xs.push_back(metric_value(m, c));
    a.metrics[c] = summarize(xs);
  }
  const std::size_t agents = reports.empty() ? 0 : reports.front().revenue.size();
  for (std::size_t i = 0; i < agents; ++i) {
    std::vector<double> rev, adv;
    for (const auto& m : reports) {
      rev.push_back(static_cast<double>(m.revenue.at(i)));
      if (i < m.advantage.size()) adv.push_back(m.advantage[i]);
    }
    a.revenue.push_back(summarize(rev));
    a.advantage.push_back(summarize(adv));
  }
  return a;
}

std::string group_name(const SimConfig& cfg) {
  if (cfg.scenario == Scenario::Baseline) return "Baseline";
  std::string g = sim::to_string(cfg.scenario);
  if (cfg.group_size) g += "-" + std::to_string(cfg.group_size);
  return g;
}

void write_run_csv(std::ostream& out, const SimConfig& cfg, const std::vector<MetricsReport>& reports) {
  out << kRunSchema << '\n';
  out << "replica,collusion_type,group_name";
  for (const auto& c : table_columns()) out << ',' << c;
  for (int i = 0; i < cfg.n_agents; ++i) out << ",revenue_" << i;
  out << '\n';
  const std::string prefix = ',' + collusion_type(cfg) + ',' + group_name(cfg);
  for (std::size_t r = 0; r < reports.size(); ++r) {
    out << r << prefix;
    for (const auto& c : table_columns()) out << ',' << num(metric_value(reports[r], c));
    for (Currency v : reports[r].revenue) out << ',' << v;
    out << '\n';
  }
  const auto agg = aggregate(reports);
  out << "mean" << prefix;
  for (const auto& c : table_columns()) out << ',' << num(agg.metrics.at(c).mean);
  for (const auto& s : agg.revenue) out << ',' << num(s.mean);
  out << '\n';
}

const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::HonestyDeposit: return "honesty_deposit";
    case SweepParameter::Temperature: return "temperature";
    case SweepParameter::GroupSize: return "group_size";
  }
  return "?";
}

std::optional<SweepParameter> parse_sweep_parameter(const std::string& s) {
  for (auto p : {SweepParameter::HonestyDeposit, SweepParameter::Temperature, SweepParameter::GroupSize})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

void SweepSpec::validate() const {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    if (!std::isfinite(v) || v < 0) throw std::invalid_argument("sweep grid values must be finite and >= 0");
    if (parameter != SweepParameter::Temperature && v != std::floor(v))
      throw std::invalid_argument(std::string(to_string(parameter)) + " takes integer values");
    if (i > 0 && !(grid[i - 1] < v)) throw std::invalid_argument("sweep grid must be strictly increasing");
  }
}

void apply_sweep_value(SimConfig& cfg, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::HonestyDeposit: cfg.honesty_deposit = static_cast<Currency>(value); break;
    case SweepParameter::Temperature: cfg.temperature = value; break;
    case SweepParameter::GroupSize: cfg.group_size = static_cast<int>(value); break;
  }
}

std::vector<SweepPoint> sweep(const SimConfig& cfg, const SweepSpec& spec, int jobs) {
  spec.validate();
  std::vector<SweepPoint> out;
  // Changing these leaves the Baseline world untouched, so one set of
  // reference means serves the whole grid.
  const auto means = baseline_means(cfg, jobs);
  for (double v : spec.grid) {
    SimConfig c = cfg;
    apply_sweep_value(c, spec.parameter, v);
    out.push_back({v, aggregate(run_replicas(c, {jobs, &means}))});
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepPoint>& points) {
  out << kSweepSchema << '\n';
  out << "parameter,value,replicas";
  write_summary_header(out);
  for (const auto& p : points) {
    out << to_string(spec.parameter) << ',' << num(p.value) << ',' << p.result.replicas;
    write_summary(out, p.result);
  }
}

std::vector<AblationRow> ablate(const SimConfig& cfg, int jobs) {
  const auto means = baseline_means(cfg, jobs);
  std::vector<AblationRow> rows = {{"full", {}, {}},
                                   {"no_anonymity", {true, false, false}, {}},
                                   {"no_incentive", {false, true, false}, {}},
                                   {"no_deposit", {false, false, true}, {}}};
  for (auto& r : rows) {
    SimConfig c = cfg;
    c.ablation = r.flags;
    r.result = aggregate(run_replicas(c, {jobs, &means}));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << kAblationSchema << '\n';
  out << "variant,replicas";
  write_summary_header(out);
  for (const auto& r : rows) {
    out << r.variant << ',' << r.result.replicas;
    write_summary(out, r.result);
  }
}

std::vector<TableRow> scenario_table(const SimConfig& base, int jobs) {
  std::vector<TableRow> rows;
  SimConfig b = base;
  b.scenario = Scenario::Baseline;
  b.group_size = 0;
  const auto base_reports = run_replicas(b, {jobs, nullptr});
  std::vector<double> means;
  for (const auto& m : base_reports) means.push_back(mean_revenue(m));
  rows.push_back({collusion_type(b), "Baseline", aggregate(base_reports)});
  for (auto behavior : {sim::CollusionBehavior::ResourceMonopoly, sim::CollusionBehavior::SpatialBlocking})
    for (auto scenario : {Scenario::CNR, Scenario::CVR, Scenario::CMR})
      for (int n = 2; n <= 5; ++n) {
        SimConfig c = base;
        c.scenario = scenario;
        c.behavior = behavior;
        c.group_size = n;
        rows.push_back({collusion_type(c), group_name(c), aggregate(run_replicas(c, {jobs, &means}))});
      }
  return rows;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << kTableSchema << '\n';
  out << "collusion_type,group_name,replicas";
  write_summary_header(out);
  for (const auto& r : rows) {
    out << r.collusion_type << ',' << r.group << ',' << r.result.replicas;
    write_summary(out, r.result);
  }
}

}  // namespace antico::exp
