#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antico/simulation.hpp"

namespace antico::sim {

// Bad key or value; line is 0 for overrides given outside a file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// Config file could not be read.
class ConfigIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keys accepted by apply_setting, in documentation order.
const std::vector<std::string>& config_keys();

// Throws ConfigError naming the key for unknown keys or unparsable values.
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);

// "key=value"; throws ConfigError when the '=' is missing.
void apply_override(SimConfig& cfg, const std::string& assignment);

// Flat "key = value" lines; '#' starts a comment. The result is validated.
SimConfig parse_config(std::istream& in, SimConfig base = {}, const std::string& source = "<config>");
SimConfig load_config(const std::filesystem::path& path, SimConfig base = {});

// Value of one key in the same syntax apply_setting accepts.
std::string config_value(const SimConfig& cfg, const std::string& key);
// Every key, one "key = value" line each; parse_config reads it back.
std::string format_config(const SimConfig& cfg);

}  // namespace antico::sim
