#include "duality/lab/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace duality::lab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && s[i] == '#') return s.substr(0, i);
  }
  return s;
}

std::string unquote(const std::string& key, std::string v) {
  if (!v.empty() && v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError(key, "unterminated quote");
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  bool have_experiment = false;
  std::string section;
  std::map<std::string, bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    const std::string value = unquote(key, trim(line.substr(eq + 1)));

    if (!section.empty()) {
      if (c.params.count(key)) throw ConfigError(key, "duplicate parameter");
      c.params[key] = value;
      continue;
    }
    if (seen[key]) throw ConfigError(key, "duplicate key");
    seen[key] = true;
    if (key == "experiment") {
      if (value.empty()) throw ConfigError(key, "empty experiment name");
      c.experiment = value;
      have_experiment = true;
    } else if (key == "seed") {
      c.seed = parse_unsigned<std::uint64_t>(key, value);
    } else if (key == "replicates") {
      c.replicates = parse_unsigned<std::size_t>(key, value);
      if (c.replicates == 0) throw ConfigError(key, "must be positive");
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else {
      throw ConfigError(key, "unknown top-level key");
    }
  }
  if (!have_experiment) throw ConfigError("experiment", "missing");
  if (!section.empty() && section != "params" && section != c.experiment)
    throw ConfigError("", "section [" + section + "] is neither [params] nor [" + c.experiment + "]");
  return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  return parse_config(in);
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "experiment = " << c.experiment << "\n";
  os << "seed = " << c.seed << "\n";
  os << "replicates = " << c.replicates << "\n";
  os << "output_dir = \"" << c.output_dir << "\"\n";
  os << "\n[params]\n";
  for (const auto& [k, v] : c.params) os << k << " = \"" << v << "\"\n";
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::string canon = "experiment\x1f" + c.experiment + "\x1eseed\x1f" + std::to_string(c.seed) +
                      "\x1ereplicates\x1f" + std::to_string(c.replicates) + "\x1e";
  for (const auto& [k, v] : c.params) canon += "param\x1f" + k + "\x1f" + v + "\x1e";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace duality::lab
