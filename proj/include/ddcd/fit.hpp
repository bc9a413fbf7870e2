#pragma once

#include <optional>
#include <vector>

#include "ddcd/graph_synth.hpp"
#include "ddcd/linear_model.hpp"
#include "ddcd/neural_models.hpp"
#include "ddcd/optimizer.hpp"

namespace ddcd {

// Result of any model; the optional members are set for the model that
// produced them.
struct FitResult {
  ModelKind model = ModelKind::kLinear;
  Matrix W;
  std::vector<HistoryRow> history;
  std::optional<NonlinearModel> nonlinear;
  std::optional<Normalizer> normalizer;
};

FitResult fit_model(ModelKind model, const Dataset& data, const TrainConfig& config);

}  // namespace ddcd
