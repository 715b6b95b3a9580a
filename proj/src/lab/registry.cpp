#include "duality/lab/registry.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "duality/lab/acceptance.hpp"
#include "experiments.hpp"

namespace duality::lab {

std::string to_string(ParamType t) {
  switch (t) {
    case ParamType::integer: return "integer";
    case ParamType::count: return "count";
    case ParamType::real: return "real";
    case ParamType::text: return "text";
    case ParamType::reals: return "real list";
    case ParamType::counts: return "count list";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s == "inf" || s == "+inf" || s == "infinity") {
    out = INFINITY;
    return true;
  }
  const char* b = s.data();
  if (!s.empty() && s.front() == '+') ++b;
  const auto [p, ec] = std::from_chars(b, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && b != s.data() + s.size() && !std::isnan(out);
}

bool parse_integer(const std::string& s, long long& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

std::string canonical(const ParamSpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  auto fail = [&](const std::string& what) -> ConfigError {
    return ConfigError(spec.key, "expected " + what + ", got '" + raw + "'");
  };
  switch (spec.type) {
    case ParamType::integer: {
      long long x;
      if (!parse_integer(v, x)) throw fail("an integer");
      return std::to_string(x);
    }
    case ParamType::count: {
      long long x;
      if (!parse_integer(v, x) || x < 0) throw fail("a nonnegative integer");
      return std::to_string(x);
    }
    case ParamType::real: {
      double x;
      if (!parse_real(v, x)) throw fail("a real number");
      return format_number(x);
    }
    case ParamType::text:
      if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : "|") + c;
        throw fail("one of " + all);
      }
      return v;
    case ParamType::reals: {
      std::string out;
      for (const auto& item : split_list(v)) {
        double x;
        if (!parse_real(item, x)) throw fail("a comma-separated list of reals");
        out += (out.empty() ? "" : ", ") + format_number(x);
      }
      if (out.empty()) throw fail("a nonempty list");
      return out;
    }
    case ParamType::counts: {
      std::string out;
      for (const auto& item : split_list(v)) {
        long long x;
        if (!parse_integer(item, x) || x < 0) throw fail("a comma-separated list of nonnegative integers");
        out += (out.empty() ? "" : ", ") + std::to_string(x);
      }
      if (out.empty()) throw fail("a nonempty list");
      return out;
    }
  }
  return v;
}

}  // namespace

const std::string& Params::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing parameter");
  return it->second;
}

long long Params::integer(const std::string& key) const {
  long long x = 0;
  if (!parse_integer(text(key), x)) throw ConfigError(key, "not an integer");
  return x;
}

std::size_t Params::count(const std::string& key) const {
  const long long x = integer(key);
  if (x < 0) throw ConfigError(key, "negative count");
  return static_cast<std::size_t>(x);
}

double Params::real(const std::string& key) const {
  double x = 0.0;
  if (!parse_real(text(key), x)) throw ConfigError(key, "not a real number");
  return x;
}

std::vector<double> Params::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(key))) {
    double x;
    if (!parse_real(item, x)) throw ConfigError(key, "not a list of reals");
    out.push_back(x);
  }
  return out;
}

std::vector<std::size_t> Params::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text(key))) {
    long long x;
    if (!parse_integer(item, x) || x < 0) throw ConfigError(key, "not a list of counts");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

const std::vector<Experiment>& registry() {
  static const std::vector<Experiment> all = [] {
    auto v = detail::make_experiments();
    v.push_back(acceptance_experiment());
    return v;
  }();
  return all;
}

const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return e;
  throw ConfigError("experiment", "unknown experiment '" + name + "' (see `duality-lab list`)");
}

Params validate_params(const Experiment& e, const std::map<std::string, std::string>& raw) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : raw) {
    const bool known = std::any_of(e.params.begin(), e.params.end(), [&](const ParamSpec& s) { return s.key == k; });
    if (!known) throw ConfigError(k, "unknown parameter for " + e.name);
  }
  for (const auto& spec : e.params) {
    const auto it = raw.find(spec.key);
    if (it != raw.end()) {
      out[spec.key] = canonical(spec, it->second);
    } else if (spec.default_value) {
      out[spec.key] = canonical(spec, *spec.default_value);
    } else {
      throw ConfigError(spec.key, "missing required parameter for " + e.name);
    }
  }
  return Params(std::move(out));
}

std::string schema_config(const Experiment& e) {
  std::ostringstream os;
  os << "# " << e.name << " (" << e.module << "): " << e.doc << "\n";
  os << "experiment = " << e.name << "\nseed = 1\nreplicates = 1000\noutput_dir = results/" << e.name << "\n\n[params]\n";
  for (const auto& p : e.params) {
    os << "# " << p.doc << " [" << to_string(p.type);
    if (!p.choices.empty()) {
      os << ":";
      for (std::size_t i = 0; i < p.choices.size(); ++i) os << (i ? "|" : " ") << p.choices[i];
    }
    os << (p.default_value ? "" : ", required") << "]\n";
    os << p.key << " = \"" << (p.default_value ? *p.default_value : p.example) << "\"\n";
  }
  return os.str();
}

void print_registry(std::ostream& os) {
  for (const auto& e : registry()) {
    os << e.name << "  [" << e.module << "]  " << e.doc << "\n";
    for (const auto& p : e.params) {
      os << "    " << p.key << " : " << to_string(p.type);
      if (!p.choices.empty()) {
        os << " {";
        for (std::size_t i = 0; i < p.choices.size(); ++i) os << (i ? "|" : "") << p.choices[i];
        os << "}";
      }
      if (p.default_value)
        os << " = " << *p.default_value;
      else
        os << " (required)";
      os << "  " << p.doc << "\n";
    }
  }
}

RunResult run_experiment(const ExperimentConfig& c, int workers) {
  const Experiment& e = find_experiment(c.experiment);
  const Params params = validate_params(e, c.params);
  ExperimentConfig canon = c;
  canon.params = params.values();

  RunContext ctx;
  ctx.mc.seed = c.seed;
  ctx.mc.replicates = c.replicates;
  ctx.mc.workers = workers;
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r = e.run(params, ctx);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.experiment = e.name;
  r.config_hash = config_hash(canon);
  r.version = artifact_version();
  r.seed = c.seed;
  r.replicates = c.replicates;
  r.params = params.values();
  r.check_rows();
  return r;
}

}  // namespace duality::lab
