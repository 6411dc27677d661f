#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "antico/config.hpp"
#include "antico/experiment.hpp"
#include "antico/ledger.hpp"
#include "antico/transcript.hpp"

namespace fs = std::filesystem;
using namespace antico;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvariant = 2, kIo = 3 };

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value scenario file");
  app->add_option("--set", c.sets, "override one key, KEY=VALUE (repeatable)");
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--replicas", c.replicas, "replica count")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory (default $ANTICO_OUT_DIR or ./antico-out)");
  app->add_option("--jobs", c.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

sim::SimConfig build_config(const Common& c) {
  sim::SimConfig cfg;
  if (!c.config.empty()) cfg = sim::load_config(c.config);
  for (const auto& s : c.sets) sim::apply_override(cfg, s);
  if (c.seed) cfg.seed = *c.seed;
  if (c.replicas) cfg.replicas = *c.replicas;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw sim::ConfigError("", 0, e.what());
  }
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path dir = c.out;
  if (dir.empty()) {
    const char* env = std::getenv("ANTICO_OUT_DIR");
    dir = env && *env ? env : "antico-out";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

// Writes through a temporary so a failed run never leaves a partial file.
template <class Fn>
void write_file(const fs::path& path, Fn fn) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + path.string());
    fn(f);
    f.flush();
    if (!f) throw IoFailure("write failed for " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot write " + path.string() + ": " + ec.message());
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad grid value '" + item + "'");
    }
  }
  return grid;
}

int cmd_table(const Common& c) {
  const auto cfg = build_config(c);
  const auto dir = out_dir(c);
  const auto rows = exp::scenario_table(cfg, c.jobs);
  write_file(dir / "table.csv", [&](std::ostream& o) { exp::write_table_csv(o, rows); });
  for (const auto& r : rows)
    std::cout << r.collusion_type << " / " << r.group << "  completion " << r.result.metrics.at("completion_rate").mean
              << '\n';
  std::cout << "wrote " << (dir / "table.csv").string() << '\n';
  return kOk;
}

int cmd_run(const Common& c, bool table) {
  if (table) return cmd_table(c);
  const auto cfg = build_config(c);
  const auto dir = out_dir(c);
  const auto reports = exp::run_replicas(cfg, {c.jobs, nullptr});
  write_file(dir / "metrics.csv", [&](std::ostream& o) { exp::write_run_csv(o, cfg, reports); });
  auto first = sim::run_episode(cfg, 0, {true, std::nullopt});
  write_file(dir / "transcript.jsonl", [&](std::ostream& o) { write_transcript(o, first.transcript); });
  const auto agg = exp::aggregate(reports);
  std::cout << exp::group_name(cfg) << ": " << cfg.replicas << " replicas, completion "
            << agg.metrics.at("completion_rate").mean << ", reports " << agg.metrics.at("report_count").mean
            << ", verified " << agg.metrics.at("verified_count").mean << "\n"
            << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "transcript.jsonl").string() << "\n";
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& grid) {
  const auto cfg = build_config(c);
  exp::SweepSpec spec;
  auto p = exp::parse_sweep_parameter(param);
  if (!p) throw std::invalid_argument("cannot sweep '" + param + "'; use honesty_deposit, temperature or group_size");
  spec.parameter = *p;
  spec.grid = parse_grid(grid);
  spec.validate();
  const auto dir = out_dir(c);
  const auto points = exp::sweep(cfg, spec, c.jobs);
  write_file(dir / "sweep.csv", [&](std::ostream& o) { exp::write_sweep_csv(o, spec, points); });
  for (const auto& pt : points)
    std::cout << param << '=' << pt.value << "  collusion " << pt.result.metrics.at("collusion_rate").mean
              << "  completion " << pt.result.metrics.at("completion_rate").mean << '\n';
  std::cout << "wrote " << (dir / "sweep.csv").string() << '\n';
  return kOk;
}

int cmd_ablate(const Common& c) {
  const auto cfg = build_config(c);
  const auto dir = out_dir(c);
  const auto rows = exp::ablate(cfg, c.jobs);
  write_file(dir / "ablation.csv", [&](std::ostream& o) { exp::write_ablation_csv(o, rows); });
  for (const auto& r : rows)
    std::cout << r.variant << "  collusion " << r.result.metrics.at("collusion_rate").mean << '\n';
  std::cout << "wrote " << (dir / "ablation.csv").string() << '\n';
  return kOk;
}

int cmd_audit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read " + path);
  Transcript t;
  try {
    t = read_transcript(in);
  } catch (const std::runtime_error& e) {
    throw IoFailure(path + ": " + e.what());
  }
  auto report = audit_transcript(t);
  for (const auto& [k, v] : t.header) std::cout << k << ": " << v << '\n';
  std::cout << report.timeline.size() << " protocol events\n";
  for (const auto& line : report.timeline) std::cout << "  " << line << '\n';
  std::cout << t.transactions.size() << " transactions, " << t.balances.size() << " accounts\n";
  if (report.ok) {
    std::cout << "audit ok\n";
    return kOk;
  }
  for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
  return kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anti-collusion mechanism simulator"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, ablate_opts;
  auto* run = app.add_subcommand("run", "run replicas of one scenario; writes metrics.csv and transcript.jsonl");
  add_common(run, run_opts);
  bool table = false;
  run->add_flag("--table", table, "run the full scenario matrix (Baseline, CNR/CVR/CMR x 2..5 x RM/SB); writes table.csv");

  auto* sweep = app.add_subcommand("sweep", "aggregate metrics over a parameter grid; writes sweep.csv");
  add_common(sweep, sweep_opts);
  std::string param, grid;
  sweep->add_option("--param", param, "honesty_deposit, temperature or group_size")->required();
  sweep->add_option("--grid", grid, "comma separated, strictly increasing")->required();

  auto* ablate = app.add_subcommand("ablate", "full mechanism against each removed pillar; writes ablation.csv");
  add_common(ablate, ablate_opts);

  auto* audit = app.add_subcommand("audit", "replay a transcript and check conservation and step order");
  std::string transcript;
  audit->add_option("transcript", transcript, "transcript.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_opts, table);
    if (*sweep) return cmd_sweep(sweep_opts, param, grid);
    if (*ablate) return cmd_ablate(ablate_opts);
    if (*audit) return cmd_audit(transcript);
  } catch (const sim::ConfigIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const sim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  }
  return kUsage;
}
