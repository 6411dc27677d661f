#include "antico/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace antico::sim {

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

struct BadValue {
  std::string why;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw BadValue{"expected a number, got '" + v + "'"};
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw BadValue{"expected true or false, got '" + v + "'"};
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string fmt(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}
std::string fmt(bool b) { return b ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
std::string fmt(T v) {
  return std::to_string(v);
}

struct Entry {
  std::string key;
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

template <class T>
Entry number(std::string key, T SimConfig::*field) {
  return {key, [field](SimConfig& c, const std::string& v) { c.*field = parse_number<T>(v); },
          [field](const SimConfig& c) { return fmt(c.*field); }};
}

template <class T>
Entry verifier(std::string key, T protocol::VerifierConfig::*field) {
  return {key, [field](SimConfig& c, const std::string& v) { c.verifier.*field = parse_number<T>(v); },
          [field](const SimConfig& c) { return fmt(c.verifier.*field); }};
}

Entry flag(std::string key, bool Ablation::*field) {
  return {key, [field](SimConfig& c, const std::string& v) { c.ablation.*field = parse_bool(v); },
          [field](const SimConfig& c) { return fmt(c.ablation.*field); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(number("n_agents", &SimConfig::n_agents));
    t.push_back(number("n_ticks", &SimConfig::n_ticks));
    t.push_back({"n_task_types",
                 [](SimConfig& c, const std::string& v) {
                   c.n_task_types = parse_number<int>(v);
                   // keep durations in step when only the count is given
                   if (c.n_task_types > 0 && static_cast<int>(c.task_durations.size()) != c.n_task_types) {
                     c.task_durations.clear();
                     for (int i = 0; i < c.n_task_types; ++i) c.task_durations.push_back(8 + 3 * i);
                   }
                 },
                 [](const SimConfig& c) { return fmt(c.n_task_types); }});
    t.push_back({"task_durations",
                 [](SimConfig& c, const std::string& v) {
                   c.task_durations.clear();
                   for (const auto& item : split_list(v)) c.task_durations.push_back(parse_number<Tick>(item));
                   c.n_task_types = static_cast<int>(c.task_durations.size());
                 },
                 [](const SimConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.task_durations.size(); ++i)
                     s += (i ? "," : "") + fmt(c.task_durations[i]);
                   return s;
                 }});
    t.push_back(number("task_reward", &SimConfig::task_reward));
    t.push_back(number("task_cost", &SimConfig::task_cost));
    t.push_back(number("honesty_deposit", &SimConfig::honesty_deposit));
    t.push_back(number("reporting_deposit", &SimConfig::reporting_deposit));
    t.push_back(number("group_min", &SimConfig::group_min));
    t.push_back(number("group_max", &SimConfig::group_max));
    t.push_back({"collusion_group_range",
                 [](SimConfig& c, const std::string& v) {
                   auto parts = split_list(v);
                   if (parts.size() != 2) throw BadValue{"expected 'min,max'"};
                   c.group_min = parse_number<int>(parts[0]);
                   c.group_max = parse_number<int>(parts[1]);
                 },
                 [](const SimConfig& c) { return fmt(c.group_min) + "," + fmt(c.group_max); }});
    t.push_back(number("group_size", &SimConfig::group_size));
    t.push_back({"scenario",
                 [](SimConfig& c, const std::string& v) {
                   auto s = parse_scenario(v);
                   if (!s) throw BadValue{"expected Baseline, CNR, CVR or CMR, got '" + v + "'"};
                   c.scenario = *s;
                 },
                 [](const SimConfig& c) { return std::string(to_string(c.scenario)); }});
    t.push_back({"behavior",
                 [](SimConfig& c, const std::string& v) {
                   auto b = protocol::parse_behavior(v);
                   if (!b) throw BadValue{"expected ResourceMonopoly (RM) or SpatialBlocking (SB), got '" + v + "'"};
                   c.behavior = *b;
                 },
                 [](const SimConfig& c) { return std::string(protocol::to_string(c.behavior)); }});
    t.push_back(number("temperature", &SimConfig::temperature));
    t.push_back(flag("ablate_anonymity", &Ablation::anonymity));
    t.push_back(flag("ablate_incentive", &Ablation::incentive));
    t.push_back(flag("ablate_deposit", &Ablation::deposit));
    t.push_back(number("seed", &SimConfig::seed));
    t.push_back(number("replicas", &SimConfig::replicas));
    t.push_back(number("collusion_start", &SimConfig::collusion_start));
    t.push_back(number("collusion_lead", &SimConfig::collusion_lead));
    t.push_back(verifier("window", &protocol::VerifierConfig::window));
    t.push_back(verifier("monopoly_threshold", &protocol::VerifierConfig::monopoly_threshold));
    t.push_back(verifier("blocking_threshold", &protocol::VerifierConfig::blocking_threshold));
    t.push_back(verifier("min_evidence_claims", &protocol::VerifierConfig::min_evidence_claims));
    t.push_back(number("report_risk", &SimConfig::report_risk));
    t.push_back(number("offer_share_max", &SimConfig::offer_share_max));
    t.push_back(number("collusion_collateral", &SimConfig::collusion_collateral));
    t.push_back(number("utility_scale", &SimConfig::utility_scale));
    t.push_back(number("initial_cash", &SimConfig::initial_cash));
    t.push_back(number("confirm_latency", &SimConfig::confirm_latency));
    t.push_back(number("malicious_reporters", &SimConfig::malicious_reporters));
    t.push_back({"mass_withdrawal", [](SimConfig& c, const std::string& v) { c.mass_withdrawal = parse_bool(v); },
                 [](const SimConfig& c) { return fmt(c.mass_withdrawal); }});
    return t;
  }();
  return table;
}

const Entry* find_entry(const std::string& key) {
  for (const auto& e : entries())
    if (e.key == key) return &e;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError("", 0, "unknown key '" + key + "'");
  try {
    e->set(cfg, value);
  } catch (const BadValue& b) {
    throw ConfigError("", 0, key + ": " + b.why);
  }
}

void apply_override(SimConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", 0, "expected KEY=VALUE, got '" + assignment + "'");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

SimConfig parse_config(std::istream& in, SimConfig base, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_setting(base, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source, lineno, e.what());
    }
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, source + ": " + e.what());
  }
  return base;
}

SimConfig load_config(const std::filesystem::path& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot read config " + path.string());
  return parse_config(in, std::move(base), path.string());
}

std::string config_value(const SimConfig& cfg, const std::string& key) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError("", 0, "unknown key '" + key + "'");
  return e->get(cfg);
}

std::string format_config(const SimConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) {
    // the range key repeats group_min/group_max
    if (e.key == "collusion_group_range") continue;
    out += e.key + " = " + e.get(cfg) + "\n";
  }
  return out;
}

}  // namespace antico::sim
