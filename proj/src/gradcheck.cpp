#include "gjepa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gjepa/error.hpp"
#include "gjepa/random.hpp"

namespace gjepa {

GradCheckReport grad_check(const std::function<long double()>& loss,
                           std::span<const GradCheckParam> params, double tolerance,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng = make_stream(options.seed, Stream::init, 0xc4ec);

  for (const auto& p : params) {
    if (!p.value->same_shape(*p.analytic))
      fail(Errc::dimension_mismatch, "grad_check: gradient shape differs for " + p.name);
    const std::size_t n = p.value->size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (options.max_entries_per_param != 0 && options.max_entries_per_param < n) {
      // partial Fisher-Yates
      for (std::size_t i = 0; i < options.max_entries_per_param; ++i)
        std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
      idx.resize(options.max_entries_per_param);
    }
    for (std::size_t i : idx) {
      double& x = p.value->data()[i];
      const double saved = x;
      auto at = [&](double offset) {
        x = saved + offset;
        return loss();
      };
      const double h = options.step;
      long double diff = 0.0L;
      if (options.five_point)
        diff = (8.0L * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0L * h);
      else
        diff = (at(h) - at(-h)) / (2.0L * h);
      const double numeric = static_cast<double>(diff);
      x = saved;
      const double analytic = p.analytic->data()[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (report.entries_checked++ == 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = {p.name, i / p.value->cols(), i % p.value->cols(), analytic, numeric, rel};
      }
    }
  }
  return report;
}

}  // namespace gjepa
