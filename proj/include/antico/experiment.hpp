#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "antico/episode.hpp"

namespace antico::exp {

using sim::MetricsReport;
using sim::SimConfig;

struct RunOptions {
  int jobs = 1;  // 0 = hardware concurrency
  // Matched Baseline mean per replica; computed when empty.
  const std::vector<double>* baseline_means = nullptr;
};

int resolve_jobs(int jobs);

// Runs replicas [0, cfg.replicas) on `jobs` threads. Results are stored by
// replica index, so the output does not depend on the thread count.
std::vector<MetricsReport> run_replicas(const SimConfig& cfg, const RunOptions& opts = {});

// Matched Baseline mean revenue for every replica of cfg.
std::vector<double> baseline_means(const SimConfig& cfg, int jobs = 1);

struct Summary {
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for one replica
};

Summary summarize(const std::vector<double>& xs);

// results table columns, in order.
const std::vector<std::string>& table_columns();
// results table columns followed by collusion_rate, group_size and
// defamations_accepted.
const std::vector<std::string>& metric_columns();
double metric_value(const MetricsReport& m, const std::string& column);

struct Aggregate {
  int replicas = 0;
  std::map<std::string, Summary> metrics;
  std::vector<Summary> revenue;    // per agent
  std::vector<Summary> advantage;  // per agent
};

Aggregate aggregate(const std::vector<MetricsReport>& reports);

// Group label in results table style: "Baseline", "CNR-3", or "CVR" when the group
// size is drawn per replica.
std::string group_name(const SimConfig& cfg);

inline constexpr const char* kRunSchema = "# schema: antico-run v1";
inline constexpr const char* kSweepSchema = "# schema: antico-sweep v1";
inline constexpr const char* kAblationSchema = "# schema: antico-ablation v1";
inline constexpr const char* kTableSchema = "# schema: antico-table v1";

// results table columns plus revenue_<i>; one row per replica, then a "mean" row.
void write_run_csv(std::ostream& out, const SimConfig& cfg, const std::vector<MetricsReport>& reports);

enum class SweepParameter { HonestyDeposit, Temperature, GroupSize };
const char* to_string(SweepParameter p);
std::optional<SweepParameter> parse_sweep_parameter(const std::string& s);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::HonestyDeposit;
  std::vector<double> grid;

  // Throws std::invalid_argument unless the grid is nonempty, strictly
  // increasing, and each value is legal for the parameter.
  void validate() const;
};

void apply_sweep_value(SimConfig& cfg, SweepParameter p, double value);

struct SweepPoint {
  double value = 0;
  Aggregate result;
};

std::vector<SweepPoint> sweep(const SimConfig& cfg, const SweepSpec& spec, int jobs = 1);
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepPoint>& points);

struct AblationRow {
  std::string variant;  // full, no_anonymity, no_incentive, no_deposit
  sim::Ablation flags;
  Aggregate result;
};

// Four variants on identical replica seeds.
std::vector<AblationRow> ablate(const SimConfig& cfg, int jobs = 1);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

struct TableRow {
  std::string collusion_type;  // No Collusion, Resource Monopoly, Spatial Blocking
  std::string group;           // Baseline, CNR-2, ...
  Aggregate result;
};

// Baseline plus {RM, SB} x {CNR, CVR, CMR} x group sizes 2..5. The Baseline
// runs once and doubles as the matched reference for every other row.
std::vector<TableRow> scenario_table(const SimConfig& base, int jobs = 1);
void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);

}  // namespace antico::exp
