#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gjepa/cluster.hpp"

namespace gjepa {

/// How positional information of a target is injected into the context
/// embeddings before the predictors.
enum class PositionMode {
  shared,      // one learned vector added to every target's member rows
  per_target,  // one learned vector per target
  sinusoidal,  // fixed sinusoidal code of the node index
  none,
};

std::string_view position_mode_name(PositionMode m) noexcept;
PositionMode parse_position_mode(std::string_view name);

enum class TargetInit {
  independent,  // target encoder drawn from its own normal init
  copy,         // target encoder starts as a copy of the context encoder
};

/// Every hyperparameter of a training run. Keys in config files and on the
/// command line use the names listed in config_keys().
struct RunConfig {
  double p1 = 0.30;             // context node drop probability
  double p2 = 0.15;             // target mask probability
  std::size_t targets = 3;
  double momentum = 0.9;        // EMA coefficient m
  double lr = 1e-3;             // base learning rate alpha
  double min_lr_ratio = 0.01;   // min_lr = lr * min_lr_ratio
  int restart_period = 75;
  int max_epochs = 300;
  int patience = 50;
  double min_delta = 1e-5;      // improvement needed to reset patience
  std::size_t k = 0;            // mixture components; 0 = number of classes
  double beta = 1.0;            // smooth-L1 threshold
  int gmm_every = 5;
  std::uint64_t seed = 0;
  CovarianceType covariance = CovarianceType::diagonal;
  PositionMode position = PositionMode::shared;
  TargetInit target_init = TargetInit::independent;
  std::vector<std::size_t> hidden = {128, 256, 512};
  bool semantic = true;         // include the pseudo-label score term
  int gmm_max_iter = 100;
  double gmm_tol = 1e-4;
  int kmeans_iter = 100;
  int probe_epochs = 200;
  double probe_lr = 0.01;

  std::size_t embedding_dim() const { return hidden.back(); }
  double min_lr() const { return lr * min_lr_ratio; }

  /// Throws Errc::config_error naming the first violated constraint.
  void validate() const;

  /// Sets one key from its textual value; throws Errc::config_error on an
  /// unknown key or malformed value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
};

const std::vector<std::string>& config_keys();

enum class ConfigSource { builtin, file, environment, flag };
std::string_view config_source_name(ConfigSource s) noexcept;

struct ConfigResolution {
  std::string key;
  std::string value;
  ConfigSource source;
};

/// Parses `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);

/// Resolves a config from built-in defaults, an optional file, the
/// GJEPA_SEED environment variable and explicit flags. Precedence:
/// flag > environment > file > default. `log` receives one entry per key.
RunConfig resolve_config(const std::filesystem::path* file,
                         const std::map<std::string, std::string>& flags,
                         std::vector<ConfigResolution>* log = nullptr,
                         const char* env_seed = nullptr);

/// Flat key = value text mirroring RunConfig.
std::string to_kv_text(const RunConfig& cfg);

}  // namespace gjepa
