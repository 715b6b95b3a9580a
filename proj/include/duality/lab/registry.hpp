#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "duality/core/parallel.hpp"
#include "duality/lab/config.hpp"
#include "duality/lab/result.hpp"

namespace duality::lab {

enum class ParamType { integer, count, real, text, reals, counts };
std::string to_string(ParamType t);

struct ParamSpec {
  std::string key;
  ParamType type = ParamType::real;
  std::optional<std::string> default_value;  // nullopt: required
  std::string doc;
  std::vector<std::string> choices;  // text parameters only; empty means free
  std::string example;               // shown in templates for required parameters
};

// Validated parameters. Getters assume validation passed.
class Params {
 public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& text(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  double real(const std::string& key) const;  // accepts inf
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
};

struct RunContext {
  core::McConfig mc;
};

struct Experiment {
  std::string name;
  std::string module;
  std::string doc;
  std::vector<ParamSpec> params;
  std::function<RunResult(const Params&, const RunContext&)> run;
};

const std::vector<Experiment>& registry();
// Throws ConfigError("experiment", ...) for unknown names.
const Experiment& find_experiment(const std::string& name);

// Fills defaults and type-checks. Unknown or missing keys, bad values and
// choices outside the allowed set throw ConfigError naming the key. Numeric
// values are rewritten in canonical form.
Params validate_params(const Experiment& e, const std::map<std::string, std::string>& raw);

// Template config for `e` with every parameter at its default (required ones
// get a placeholder example value); parses back through parse_config.
std::string schema_config(const Experiment& e);
void print_registry(std::ostream& os);

// Validates, runs and fills the metadata. Throws ConfigError on bad configs.
RunResult run_experiment(const ExperimentConfig& c, int workers);

// The whole `duality-lab run` flow: returns 0, 1 (config error) or 2 (a
// declared invariant failed). Messages go to `log`.
int run_to_directory(const ExperimentConfig& c, int workers, std::ostream& log);

}  // namespace duality::lab
