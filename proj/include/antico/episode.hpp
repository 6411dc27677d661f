#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "antico/simulation.hpp"
#include "antico/transcript.hpp"

namespace antico::sim {

struct MetricsReport {
  int total_tasks = 0;
  int completed = 0;
  int failed = 0;
  int unassigned = 0;
  int in_progress = 0;
  double completion_rate = 0;
  double success_rate = 0;
  double avg_processing_time = 0;
  int report_count = 0;
  int verified_count = 0;
  std::vector<Currency> revenue;  // per agent
  std::vector<double> advantage;  // revenue minus matched baseline mean
  std::vector<Role> roles;
  double collusion_rate = 0;
  int invited = 0;
  int joined = 0;
  int group_size = 0;
  int defamations_accepted = 0;
};

struct EpisodeOptions {
  bool keep_transcript = false;
  // Mean per-agent revenue of the matched Baseline; computed when absent.
  std::optional<double> baseline_mean;
};

struct EpisodeResult {
  MetricsReport metrics;
  Transcript transcript;
  Currency manager_delta = 0;
  std::vector<protocol::VerificationOutcome> outcomes;
  WorldState world;
};

std::uint64_t replica_seed(const SimConfig& cfg, std::uint64_t replica);

EpisodeResult run_episode(const SimConfig& cfg, std::uint64_t replica, const EpisodeOptions& opts = {});

// Mean per-agent revenue of the Baseline with the same world parameters.
double baseline_mean_revenue(const SimConfig& cfg, std::uint64_t replica);

// Table-level fields from a finished world; revenue fields are left to the
// caller, which owns the ledger.
MetricsReport compute_metrics(const WorldState& w, std::optional<double> baseline_reference);

}  // namespace antico::sim
