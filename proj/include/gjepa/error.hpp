#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gjepa {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  degenerate_sample,
  degenerate_sampling_configuration,
  degenerate_mask,
  degenerate_split,
  divergence,
  covariance_collapse,
  empty_component,
  parse_error,
  count_mismatch,
  checksum_mismatch,
  index_out_of_range,
  io_error,
  config_error,
  checkpoint_mismatch,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library is an Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Dataset loading failures name the offending file and (1-based) line; line 0
// means the failure is not tied to a single line.
class DatasetError : public Error {
 public:
  DatasetError(Errc code, std::string file, std::size_t line, const std::string& detail);
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace gjepa
