#pragma once

// Flat key = value configuration with bracketed sections:
//
//   # comment
//   [experiment baseline]
//   p = 2
//   sigma_list = -1.5, 0.1875
//
// Section kinds: "experiment NAME" (any number), "identities", "lemmas".
// Unknown sections or keys, duplicates and unparsable values are errors that
// carry the offending line number. A run manifest (JSON) can be loaded in
// place of a text config; it stores the fully resolved sections.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "bbmlab/decay.hpp"

namespace bbm {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string kind;  // experiment | identities | lemmas
  std::string name;  // experiments only
  int line = 0;
  std::vector<ConfigEntry> entries;
};

struct ConfigFile {
  std::string source;
  std::vector<ConfigSection> sections;
};

// ---------------------------------------------------------------------------
// Number formatting shared by config round trips and CSV output: shortest
// representation that reads back to the same double, '.' decimal always.

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline void add_section(ConfigFile& cf, const std::string& header, int line) {
  std::istringstream is(header);
  std::string kind, name, extra;
  is >> kind >> name >> extra;
  if (!extra.empty()) throw ConfigError(cf.source, line, "unexpected text in section header [" + header + "]");
  if (kind == "experiment") {
    if (name.empty()) throw ConfigError(cf.source, line, "experiment sections need a name: [experiment NAME]");
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
        throw ConfigError(cf.source, line, "experiment name may only use letters, digits, '_', '-', '.'");
      }
    }
    for (const auto& s : cf.sections) {
      if (s.kind == "experiment" && s.name == name) {
        throw ConfigError(cf.source, line, "duplicate experiment name '" + name + "'");
      }
    }
  } else if (kind == "identities" || kind == "lemmas") {
    if (!name.empty()) throw ConfigError(cf.source, line, "[" + kind + "] takes no name");
    for (const auto& s : cf.sections) {
      if (s.kind == kind) throw ConfigError(cf.source, line, "duplicate [" + kind + "] section");
    }
  } else {
    throw ConfigError(cf.source, line, "unknown section kind '" + kind + "'");
  }
  cf.sections.push_back({kind, name, line, {}});
}

inline void add_entry(ConfigFile& cf, const std::string& key, const std::string& value, int line) {
  if (cf.sections.empty()) throw ConfigError(cf.source, line, "key '" + key + "' appears before any section");
  auto& sec = cf.sections.back();
  for (const auto& e : sec.entries) {
    if (e.key == key) {
      throw ConfigError(cf.source, line,
                        "duplicate key '" + key + "' (first set on line " + std::to_string(e.line) + ")");
    }
  }
  if (value.empty()) throw ConfigError(cf.source, line, "key '" + key + "' has no value");
  sec.entries.push_back({key, value, line});
}

}  // namespace detail

inline ConfigFile parse_config_text(const std::string& text, const std::string& source = "<config>") {
  ConfigFile cf;
  cf.source = source;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(source, line, "unterminated section header");
      detail::add_section(cf, detail::trim(std::string_view(s).substr(1, s.size() - 2)), line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    if (key.empty()) throw ConfigError(source, line, "missing key before '='");
    detail::add_entry(cf, key, detail::trim(std::string_view(s).substr(eq + 1)), line);
  }
  return cf;
}

/// Sections stored in a run manifest: {"config": [{"section": "...", "values": {...}}]}.
inline ConfigFile parse_manifest(const std::string& text, const std::string& source) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(source, 0, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("config") || !j["config"].is_array()) {
    throw ConfigError(source, 0, "manifest has no 'config' array");
  }
  ConfigFile cf;
  cf.source = source;
  for (const auto& sec : j["config"]) {
    if (!sec.is_object() || !sec.contains("section") || !sec["section"].is_string() || !sec.contains("values") ||
        !sec["values"].is_object()) {
      throw ConfigError(source, 0, "malformed manifest section");
    }
    detail::add_section(cf, sec["section"].get<std::string>(), 0);
    for (const auto& [k, v] : sec["values"].items()) {
      if (!v.is_string()) throw ConfigError(source, 0, "manifest value for '" + k + "' must be a string");
      detail::add_entry(cf, k, v.get<std::string>(), 0);
    }
  }
  return cf;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_manifest(text, path);
  return parse_config_text(text, path);
}

// ---------------------------------------------------------------------------
// Typed access with line-numbered errors

class SectionReader {
 public:
  SectionReader(const ConfigFile& cf, const ConfigSection& sec) : cf_(cf), sec_(sec) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    for (const auto& e : sec_.entries) {
      if (e.key == key) return e.value;
    }
    return std::nullopt;
  }

  double number(const std::string& key) { return parse_number(key, required(key)); }
  double number(const std::string& key, double fallback) {
    const auto v = raw(key);
    return v ? parse_number(key, *v) : fallback;
  }

  long long integer(const std::string& key) { return parse_integer(key, required(key)); }
  long long integer(const std::string& key, long long fallback) {
    const auto v = raw(key);
    return v ? parse_integer(key, *v) : fallback;
  }

  std::vector<double> list(const std::string& key) { return parse_list(key, required(key)); }
  std::vector<double> list(const std::string& key, std::vector<double> fallback) {
    const auto v = raw(key);
    return v ? parse_list(key, *v) : fallback;
  }

  std::string word(const std::string& key) { return required(key); }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& e : sec_.entries) {
      if (!used_.count(e.key)) throw ConfigError(cf_.source, e.line, "unknown key '" + e.key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(cf_.source, line_of(key), what);
  }

  int line_of(const std::string& key) const {
    for (const auto& e : sec_.entries) {
      if (e.key == key) return e.line;
    }
    return sec_.line;
  }

 private:
  std::string required(const std::string& key) {
    const auto v = raw(key);
    if (!v) {
      std::string where = "[" + sec_.kind + (sec_.name.empty() ? "" : " " + sec_.name) + "]";
      throw ConfigError(cf_.source, sec_.line, "missing required key '" + key + "' in " + where);
    }
    return *v;
  }

  double parse_number(const std::string& key, const std::string& s) const {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail(key, "value of '" + key + "' is not a finite number: '" + s + "'");
    }
    return v;
  }

  long long parse_integer(const std::string& key, const std::string& s) const {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(key, "value of '" + key + "' is not an integer: '" + s + "'");
    }
    return v;
  }

  std::vector<double> parse_list(const std::string& key, const std::string& s) const {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto len = comma == std::string::npos ? std::string::npos : comma - start;
      const std::string item = detail::trim(std::string_view(s).substr(start, len));
      if (item.empty()) fail(key, "empty item in list '" + key + "'");
      out.push_back(parse_number(key, item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  const ConfigFile& cf_;
  const ConfigSection& sec_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Experiments

inline SimConfig read_experiment(const ConfigFile& cf, const ConfigSection& sec) {
  SectionReader r(cf, sec);
  SimConfig c;
  c.name = sec.name;
  const long long p = r.integer("p");
  if (p < 2 || p > 64) r.fail("p", "p must be an integer in [2, 64]");
  c.p = static_cast<int>(p);
  const long long n = r.integer("n_points");
  if (n < 8 || n % 2 != 0) r.fail("n_points", "n_points must be even and at least 8");
  c.n_points = static_cast<std::size_t>(n);
  c.domain_length = r.number("domain_length");
  c.x_min = r.number("x_min");
  c.dt = r.number("dt");
  c.t_end = r.number("t_end");
  c.dt_out = r.number("dt_out", 0.5);

  const std::string data = r.word("data");
  if (data == "gaussian") c.data = DataKind::Gaussian;
  else if (data == "solitary") c.data = DataKind::Solitary;
  else if (data == "custom") c.data = DataKind::Custom;
  else r.fail("data", "data must be gaussian, solitary or custom, got '" + data + "'");
  if (c.data == DataKind::Solitary) {
    c.wave_speed = r.number("wave_speed");
    c.epsilon = 0.0;
  } else {
    c.epsilon = r.number("epsilon");
    c.data_width = r.number("data_width");
  }
  c.data_center = r.number("data_center", 0.0);
  const long long seed = r.integer("seed", 0);
  if (seed < 0) r.fail("seed", "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);

  c.b = r.number("b");
  c.a = r.number("a");
  c.L = r.number("L");
  c.sigma_tilde = r.number("sigma_tilde");
  c.alpha_right = r.number("alpha_right");
  c.alpha_left = r.number("alpha_left");
  c.sigma_list = r.list("sigma_list");
  c.t0_list = r.list("t0_list", {});
  r.finish();
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    // Messages lead with the offending key; point at its line when present.
    const std::string what = e.what();
    std::string key = what.substr(0, what.find(' '));
    if (key == "every") key = "t0_list";
    throw ConfigError(cf.source, r.line_of(key), std::string("[experiment ") + sec.name + "]: " + what);
  }
  return c;
}

inline std::vector<SimConfig> read_experiments(const ConfigFile& cf) {
  std::vector<SimConfig> out;
  for (const auto& sec : cf.sections) {
    if (sec.kind == "experiment") out.push_back(read_experiment(cf, sec));
  }
  return out;
}

/// Fully resolved values, in a fixed key order, for the manifest.
inline nlohmann::ordered_json experiment_values(const SimConfig& c) {
  nlohmann::ordered_json v;
  v["p"] = std::to_string(c.p);
  v["n_points"] = std::to_string(c.n_points);
  v["domain_length"] = format_number(c.domain_length);
  v["x_min"] = format_number(c.x_min);
  v["dt"] = format_number(c.dt);
  v["t_end"] = format_number(c.t_end);
  v["dt_out"] = format_number(c.dt_out);
  v["data"] = std::string(to_string(c.data));
  if (c.data == DataKind::Solitary) {
    v["wave_speed"] = format_number(c.wave_speed);
  } else {
    v["epsilon"] = format_number(c.epsilon);
    v["data_width"] = format_number(c.data_width);
  }
  v["data_center"] = format_number(c.data_center);
  v["seed"] = std::to_string(c.seed);
  v["b"] = format_number(c.b);
  v["a"] = format_number(c.a);
  v["L"] = format_number(c.L);
  v["sigma_tilde"] = format_number(c.sigma_tilde);
  v["alpha_right"] = format_number(c.alpha_right);
  v["alpha_left"] = format_number(c.alpha_left);
  v["sigma_list"] = format_list(c.sigma_list);
  if (!c.t0_list.empty()) v["t0_list"] = format_list(c.t0_list);
  return v;
}

// ---------------------------------------------------------------------------
// Identity and lemma suites

struct IdentitySuiteConfig {
  std::size_t n_points = 1024;
  double domain_length = 120.0;
  double x_min = -60.0;
  std::vector<int> p_list{2, 3, 5};
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  bool zero_field = false;
  double epsilon = 0.5;
  double L = 10.0;
  double b = 0.5;
  double sigma_tilde = 0.5;
  double tolerance = 1e-9;
  double fd_step = 1e-3;
  double fd_tolerance = 1e-5;
};

struct LemmaSuiteConfig {
  std::uint64_t seed = 1;
  std::size_t norm_trials = 200;
  double norm_L = 20.0;
  std::array<double, 4> norm_a{1.0, 1.0, 1.0, 1.0};
  std::size_t comparison_trials = 500;
  std::size_t quartic_trials = 1000;
  std::size_t nonlinear_shapes = 24;
  std::vector<int> nonlinear_p_list{2, 3, 4, 5};
  std::vector<double> nonlinear_eps_list{0.1, 0.05, 0.025, 0.0125};
  double nonlinear_L = 20.0;
  double sigma_tilde = 0.5;
  std::vector<double> weight_L_list{20.0, 1.0};
};

namespace detail {

inline const ConfigSection& single_section(const ConfigFile& cf, const std::string& kind) {
  const ConfigSection* found = nullptr;
  for (const auto& s : cf.sections) {
    if (s.kind == kind) found = &s;
  }
  if (found == nullptr) throw ConfigError(cf.source, 0, "config has no [" + kind + "] section");
  return *found;
}

inline std::size_t positive_count(SectionReader& r, const std::string& key) {
  const long long v = r.integer(key);
  if (v <= 0) r.fail(key, "'" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

inline std::vector<int> power_list(SectionReader& r, const std::string& key) {
  std::vector<int> out;
  for (double v : r.list(key)) {
    if (v != std::floor(v) || v < 2 || v > 64) r.fail(key, "'" + key + "' entries must be integers in [2, 64]");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::uint64_t read_seed(SectionReader& r) {
  const long long s = r.integer("seed");
  if (s < 0) r.fail("seed", "seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

}  // namespace detail

inline IdentitySuiteConfig read_identities(const ConfigFile& cf) {
  const auto& sec = detail::single_section(cf, "identities");
  SectionReader r(cf, sec);
  IdentitySuiteConfig c;
  const long long n = r.integer("n_points");
  if (n < 8 || n % 2 != 0) r.fail("n_points", "n_points must be even and at least 8");
  c.n_points = static_cast<std::size_t>(n);
  c.domain_length = r.number("domain_length");
  if (!(c.domain_length > 0.0)) r.fail("domain_length", "domain_length must be positive");
  c.x_min = r.number("x_min");
  c.p_list = detail::power_list(r, "p_list");
  c.trials = detail::positive_count(r, "trials");
  c.seed = detail::read_seed(r);
  const std::string data = r.word("data");
  if (data != "random" && data != "zero") r.fail("data", "data must be random or zero");
  c.zero_field = data == "zero";
  c.epsilon = r.number("epsilon");
  if (!(c.epsilon >= 0.0)) r.fail("epsilon", "epsilon must be nonnegative");
  c.L = r.number("L");
  if (!(c.L > 0.0)) r.fail("L", "L must be positive");
  c.b = r.number("b");
  if (!(c.b > 0.0)) r.fail("b", "b must be positive");
  c.sigma_tilde = r.number("sigma_tilde");
  if (!(c.sigma_tilde > 0.0)) r.fail("sigma_tilde", "sigma_tilde must be positive");
  c.tolerance = r.number("tolerance");
  if (!(c.tolerance >= 0.0)) r.fail("tolerance", "tolerance must be nonnegative");
  c.fd_step = r.number("fd_step");
  if (!(c.fd_step > 0.0 && c.fd_step <= 0.5)) r.fail("fd_step", "fd_step must lie in (0, 0.5]");
  c.fd_tolerance = r.number("fd_tolerance");
  if (!(c.fd_tolerance >= 0.0)) r.fail("fd_tolerance", "fd_tolerance must be nonnegative");
  r.finish();
  return c;
}

inline nlohmann::ordered_json identity_values(const IdentitySuiteConfig& c) {
  nlohmann::ordered_json v;
  std::vector<double> ps(c.p_list.begin(), c.p_list.end());
  v["n_points"] = std::to_string(c.n_points);
  v["domain_length"] = format_number(c.domain_length);
  v["x_min"] = format_number(c.x_min);
  v["p_list"] = format_list(ps);
  v["trials"] = std::to_string(c.trials);
  v["seed"] = std::to_string(c.seed);
  v["data"] = c.zero_field ? "zero" : "random";
  v["epsilon"] = format_number(c.epsilon);
  v["L"] = format_number(c.L);
  v["b"] = format_number(c.b);
  v["sigma_tilde"] = format_number(c.sigma_tilde);
  v["tolerance"] = format_number(c.tolerance);
  v["fd_step"] = format_number(c.fd_step);
  v["fd_tolerance"] = format_number(c.fd_tolerance);
  return v;
}

inline LemmaSuiteConfig read_lemmas(const ConfigFile& cf) {
  const auto& sec = detail::single_section(cf, "lemmas");
  SectionReader r(cf, sec);
  LemmaSuiteConfig c;
  c.seed = detail::read_seed(r);
  c.norm_trials = detail::positive_count(r, "norm_trials");
  c.norm_L = r.number("norm_L");
  if (!(c.norm_L > 0.0)) r.fail("norm_L", "norm_L must be positive");
  const auto a = r.list("norm_a");
  if (a.size() != 4) r.fail("norm_a", "norm_a needs exactly four coefficients");
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(a[i] > 0.0)) r.fail("norm_a", "norm_a coefficients must be positive");
    c.norm_a[i] = a[i];
  }
  c.comparison_trials = detail::positive_count(r, "comparison_trials");
  c.quartic_trials = detail::positive_count(r, "quartic_trials");
  c.nonlinear_shapes = detail::positive_count(r, "nonlinear_shapes");
  c.nonlinear_p_list = detail::power_list(r, "nonlinear_p_list");
  c.nonlinear_eps_list = r.list("nonlinear_eps_list");
  if (c.nonlinear_eps_list.size() < 2) r.fail("nonlinear_eps_list", "nonlinear_eps_list needs at least two sizes");
  for (double e : c.nonlinear_eps_list) {
    if (!(e > 0.0 && e <= 0.1)) r.fail("nonlinear_eps_list", "nonlinear_eps_list entries must lie in (0, 0.1]");
  }
  c.nonlinear_L = r.number("nonlinear_L");
  if (!(c.nonlinear_L > 0.0)) r.fail("nonlinear_L", "nonlinear_L must be positive");
  c.sigma_tilde = r.number("sigma_tilde");
  if (!(c.sigma_tilde > 0.0)) r.fail("sigma_tilde", "sigma_tilde must be positive");
  c.weight_L_list = r.list("weight_L_list");
  for (double L : c.weight_L_list) {
    if (!(L > 0.0)) r.fail("weight_L_list", "weight_L_list entries must be positive");
  }
  r.finish();
  return c;
}

inline nlohmann::ordered_json lemma_values(const LemmaSuiteConfig& c) {
  nlohmann::ordered_json v;
  v["seed"] = std::to_string(c.seed);
  v["norm_trials"] = std::to_string(c.norm_trials);
  v["norm_L"] = format_number(c.norm_L);
  v["norm_a"] = format_list({c.norm_a.begin(), c.norm_a.end()});
  v["comparison_trials"] = std::to_string(c.comparison_trials);
  v["quartic_trials"] = std::to_string(c.quartic_trials);
  v["nonlinear_shapes"] = std::to_string(c.nonlinear_shapes);
  v["nonlinear_p_list"] = format_list({c.nonlinear_p_list.begin(), c.nonlinear_p_list.end()});
  v["nonlinear_eps_list"] = format_list(c.nonlinear_eps_list);
  v["nonlinear_L"] = format_number(c.nonlinear_L);
  v["sigma_tilde"] = format_number(c.sigma_tilde);
  v["weight_L_list"] = format_list(c.weight_L_list);
  return v;
}

}  // namespace bbm
