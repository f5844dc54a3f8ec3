#include "gjepa/error.hpp"

namespace gjepa {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::degenerate_sample: return "degenerate sample";
    case Errc::degenerate_sampling_configuration: return "degenerate sampling configuration";
    case Errc::degenerate_mask: return "degenerate mask";
    case Errc::degenerate_split: return "degenerate split";
    case Errc::divergence: return "divergence";
    case Errc::covariance_collapse: return "covariance collapse";
    case Errc::empty_component: return "empty component";
    case Errc::parse_error: return "parse error";
    case Errc::count_mismatch: return "count mismatch";
    case Errc::checksum_mismatch: return "checksum mismatch";
    case Errc::index_out_of_range: return "index out of range";
    case Errc::io_error: return "io error";
    case Errc::config_error: return "config error";
    case Errc::checkpoint_mismatch: return "checkpoint mismatch";
  }
  return "unknown";
}

DatasetError::DatasetError(Errc code, std::string file, std::size_t line,
                           const std::string& detail)
    : Error(code, std::string(errc_name(code)) + ": " + file +
                      (line ? ":" + std::to_string(line) : std::string()) + ": " + detail),
      file_(std::move(file)),
      line_(line) {}

void fail(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

}  // namespace gjepa
