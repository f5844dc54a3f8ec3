#pragma once

#include <optional>

#include "gjepa/config.hpp"
#include "gjepa/gradcheck.hpp"
#include "gjepa/model.hpp"

namespace gjepa {

struct PipelineCheckOptions {
  // Training epochs run before the check; the check then freezes the sample
  // of the next epoch.
  int warmup_epochs = 0;
  GradCheckOptions grad;
  double tolerance = 1e-4;
  // Pseudo labels for the semantic term. When absent they are fitted once on
  // the initial context embeddings. Either way they are held fixed.
  std::optional<PseudoLabelPair> labels;
  // Scale of the random values written into the position parameters when
  // there is no warmup (they start at zero otherwise).
  double position_scale = 0.1;
};

struct PipelineCheckResult {
  GradCheckReport report;
  LossBreakdown loss;
  bool semantic_active = false;
  double seconds = 0.0;
};

/// Gradient check of the whole objective (context encoder, position
/// parameters, predictors, both loss terms) against central differences on
/// one frozen epoch sample of `g`.
PipelineCheckResult check_pipeline_gradients(const CsrGraph& g, const RunConfig& cfg,
                                             const PipelineCheckOptions& options);

}  // namespace gjepa
