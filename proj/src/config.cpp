#include "gjepa/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gjepa/error.hpp"

namespace gjepa {

std::string_view position_mode_name(PositionMode m) noexcept {
  switch (m) {
    case PositionMode::shared: return "shared";
    case PositionMode::per_target: return "per_target";
    case PositionMode::sinusoidal: return "sinusoidal";
    case PositionMode::none: return "none";
  }
  return "shared";
}

PositionMode parse_position_mode(std::string_view name) {
  if (name == "shared") return PositionMode::shared;
  if (name == "per_target") return PositionMode::per_target;
  if (name == "sinusoidal") return PositionMode::sinusoidal;
  if (name == "none") return PositionMode::none;
  fail(Errc::config_error, "unknown position mode '" + std::string(name) + "'");
}

std::string_view config_source_name(ConfigSource s) noexcept {
  switch (s) {
    case ConfigSource::builtin: return "default";
    case ConfigSource::file: return "config file";
    case ConfigSource::environment: return "environment";
    case ConfigSource::flag: return "flag";
  }
  return "default";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(Errc::config_error,
       "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(key, text);
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  bad_value(key, text);
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "p1",           "p2",         "targets",     "momentum",     "lr",
      "min_lr_ratio", "restart_period", "max_epochs", "patience",  "min_delta",
      "k",            "beta",       "gmm_every",   "seed",         "covariance",
      "position",     "target_init", "hidden",     "semantic",     "gmm_max_iter",
      "gmm_tol",      "kmeans_iter", "probe_epochs", "probe_lr"};
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "p1") p1 = parse_number<double>(key, v);
  else if (key == "p2") p2 = parse_number<double>(key, v);
  else if (key == "targets") targets = parse_number<std::size_t>(key, v);
  else if (key == "momentum" || key == "m") momentum = parse_number<double>(key, v);
  else if (key == "lr") lr = parse_number<double>(key, v);
  else if (key == "min_lr_ratio") min_lr_ratio = parse_number<double>(key, v);
  else if (key == "restart_period") restart_period = parse_number<int>(key, v);
  else if (key == "max_epochs") max_epochs = parse_number<int>(key, v);
  else if (key == "patience") patience = parse_number<int>(key, v);
  else if (key == "min_delta") min_delta = parse_number<double>(key, v);
  else if (key == "k") k = parse_number<std::size_t>(key, v);
  else if (key == "beta") beta = parse_number<double>(key, v);
  else if (key == "gmm_every") gmm_every = parse_number<int>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "covariance") {
    if (v == "diag" || v == "diagonal") covariance = CovarianceType::diagonal;
    else if (v == "full") covariance = CovarianceType::full;
    else bad_value(key, v);
  } else if (key == "position") position = parse_position_mode(v);
  else if (key == "target_init") {
    if (v == "independent") target_init = TargetInit::independent;
    else if (v == "copy") target_init = TargetInit::copy;
    else bad_value(key, v);
  } else if (key == "hidden") {
    std::vector<std::size_t> dims;
    std::string_view rest = v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      dims.push_back(parse_number<std::size_t>(key, rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (dims.empty()) bad_value(key, v);
    hidden = std::move(dims);
  } else if (key == "semantic") semantic = parse_bool(key, v);
  else if (key == "gmm_max_iter") gmm_max_iter = parse_number<int>(key, v);
  else if (key == "gmm_tol") gmm_tol = parse_number<double>(key, v);
  else if (key == "kmeans_iter") kmeans_iter = parse_number<int>(key, v);
  else if (key == "probe_epochs") probe_epochs = parse_number<int>(key, v);
  else if (key == "probe_lr") probe_lr = parse_number<double>(key, v);
  else fail(Errc::config_error, "unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::get(std::string_view key) const {
  if (key == "p1") return fmt(p1);
  if (key == "p2") return fmt(p2);
  if (key == "targets") return std::to_string(targets);
  if (key == "momentum") return fmt(momentum);
  if (key == "lr") return fmt(lr);
  if (key == "min_lr_ratio") return fmt(min_lr_ratio);
  if (key == "restart_period") return std::to_string(restart_period);
  if (key == "max_epochs") return std::to_string(max_epochs);
  if (key == "patience") return std::to_string(patience);
  if (key == "min_delta") return fmt(min_delta);
  if (key == "k") return std::to_string(k);
  if (key == "beta") return fmt(beta);
  if (key == "gmm_every") return std::to_string(gmm_every);
  if (key == "seed") return std::to_string(seed);
  if (key == "covariance") return covariance == CovarianceType::full ? "full" : "diag";
  if (key == "position") return std::string(position_mode_name(position));
  if (key == "target_init") return target_init == TargetInit::copy ? "copy" : "independent";
  if (key == "hidden") {
    std::string s;
    for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "," : "") + std::to_string(hidden[i]);
    return s;
  }
  if (key == "semantic") return semantic ? "true" : "false";
  if (key == "gmm_max_iter") return std::to_string(gmm_max_iter);
  if (key == "gmm_tol") return fmt(gmm_tol);
  if (key == "kmeans_iter") return std::to_string(kmeans_iter);
  if (key == "probe_epochs") return std::to_string(probe_epochs);
  if (key == "probe_lr") return fmt(probe_lr);
  fail(Errc::config_error, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(Errc::config_error, what);
  };
  check(p1 > 0.0 && p1 < 1.0, "p1 must lie in (0, 1)");
  check(p2 > 0.0 && p2 < p1, "p2 must satisfy 0 < p2 < p1");
  check(targets >= 1, "targets must be at least 1");
  check(momentum >= 0.0 && momentum <= 1.0, "momentum must lie in [0, 1]");
  check(lr >= 0.0, "lr must be nonnegative");
  check(min_lr_ratio >= 0.0 && min_lr_ratio <= 1.0, "min_lr_ratio must lie in [0, 1]");
  check(restart_period > 0, "restart_period must be positive");
  check(max_epochs >= 1, "max_epochs must be at least 1");
  check(patience >= 0, "patience must be nonnegative");
  check(beta > 0.0, "beta must be positive");
  check(gmm_every >= 1, "gmm_every must be at least 1");
  check(!hidden.empty(), "hidden must list at least one layer width");
  for (auto h : hidden) check(h > 0, "hidden widths must be positive");
  check(gmm_max_iter >= 0 && kmeans_iter >= 0, "iteration limits must be nonnegative");
  check(probe_epochs >= 1, "probe_epochs must be at least 1");
  check(probe_lr > 0.0, "probe_lr must be positive");
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

RunConfig resolve_config(const std::filesystem::path* file,
                         const std::map<std::string, std::string>& flags,
                         std::vector<ConfigResolution>* log, const char* env_seed) {
  RunConfig cfg;
  std::map<std::string, ConfigSource> source;
  for (const auto& k : config_keys()) source[k] = ConfigSource::builtin;

  auto apply = [&](const std::map<std::string, std::string>& kv, ConfigSource src) {
    for (const auto& [k, v] : kv) {
      cfg.set(k, v);
      source[k == "m" ? "momentum" : k] = src;
    }
  };
  if (file) apply(parse_kv_file(*file), ConfigSource::file);
  if (env_seed && *env_seed) {
    cfg.set("seed", env_seed);
    source["seed"] = ConfigSource::environment;
  }
  apply(flags, ConfigSource::flag);
  cfg.validate();
  if (log) {
    log->clear();
    for (const auto& k : config_keys()) log->push_back({k, cfg.get(k), source[k]});
  }
  return cfg;
}

std::string to_kv_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : config_keys()) s += k + " = " + cfg.get(k) + "\n";
  return s;
}

}  // namespace gjepa
