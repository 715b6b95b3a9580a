#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

// Experiment configuration files:
//
//   # comment
//   experiment = check_voter_duality
//   seed = 7
//   replicates = 100000
//   output_dir = out/voter
//
//   [params]            (or [check_voter_duality])
//   L = 8
//   A = 2, 3
//
// Top-level keys must precede the section. Values may be quoted.
namespace duality::lab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : "'" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 1;
  std::size_t replicates = 1000;
  std::string output_dir = "results";

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& c);

// FNV-1a over the canonical form of experiment, seed, replicates and params.
// output_dir is not part of it: where results go does not change them.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hash_hex(std::uint64_t h);

}  // namespace duality::lab
