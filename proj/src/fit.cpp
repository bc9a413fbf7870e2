#include "ddcd/fit.hpp"

namespace ddcd {

FitResult fit_model(ModelKind model, const Dataset& data, const TrainConfig& config) {
  FitResult out;
  out.model = model;
  switch (model) {
    case ModelKind::kLinear: {
      LinearFit fit = fit_linear(data, config);
      out.W = std::move(fit.W);
      out.history = std::move(fit.history);
      break;
    }
    case ModelKind::kNonlinear: {
      NonlinearFit fit = fit_nonlinear(data, config);
      out.W = fit.model.W;
      out.history = std::move(fit.history);
      out.nonlinear = std::move(fit.model);
      break;
    }
    case ModelKind::kSmooth: {
      SmoothFit fit = fit_smooth(data, config);
      out.W = std::move(fit.W);
      out.history = std::move(fit.history);
      out.normalizer = std::move(fit.normalizer);
      break;
    }
  }
  return out;
}

}  // namespace ddcd
