#include "mixmax/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixmax/error.hpp"

namespace mixmax {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::squared_error:
      return "squared_error";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "squared_error") return LossKind::squared_error;
  throw DomainError("unknown loss kind '" + std::string(name) + "'");
}

PredictionOutput PredictionOutput::probabilities(std::vector<double> probs) {
  if (probs.empty()) throw DimensionError("label distribution needs at least one label");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw DomainError("label probabilities must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("label probabilities sum to " + std::to_string(total));
  }
  return PredictionOutput(OutputKind::probabilities, std::move(probs));
}

PredictionOutput PredictionOutput::likelihood(double probability) {
  if (!std::isfinite(probability) || probability < 0.0 || probability > 1.0) {
    throw DomainError("likelihood must lie in [0, 1]");
  }
  return PredictionOutput(OutputKind::likelihood, {probability});
}

PredictionOutput PredictionOutput::regression(std::vector<double> values) {
  if (values.empty()) throw DimensionError("regression output needs at least one coordinate");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("regression output must be finite");
  }
  return PredictionOutput(OutputKind::regression, std::move(values));
}

namespace {

// Index of the coordinate cross-entropy reads, validating the pairing.
int observed_index(const PredictionOutput& output, const Target& target) {
  switch (output.kind()) {
    case OutputKind::probabilities: {
      const auto* label = std::get_if<Label>(&target);
      if (label == nullptr) throw DomainError("cross-entropy on a label distribution needs a label target");
      if (label->index < 0 || static_cast<std::size_t>(label->index) >= output.arity()) {
        throw DomainError("label " + std::to_string(label->index) + " outside vocabulary of size " +
                          std::to_string(output.arity()));
      }
      return label->index;
    }
    case OutputKind::likelihood:
      return 0;
    case OutputKind::regression:
      break;
  }
  throw DomainError("cross-entropy is undefined for regression outputs");
}

std::span<const double> regression_target(const PredictionOutput& output, const Target& target) {
  if (output.kind() != OutputKind::regression) throw DomainError("squared error needs a regression output");
  const auto* values = std::get_if<RealVector>(&target);
  if (values == nullptr) throw DomainError("squared error needs a real-valued target");
  if (values->size() != output.arity()) {
    throw DimensionError("regression target has " + std::to_string(values->size()) +
                         " coordinates, prediction has " + std::to_string(output.arity()));
  }
  for (double v : *values) {
    if (!std::isfinite(v)) throw DomainError("regression target must be finite");
  }
  return *values;
}

}  // namespace

double cross_entropy(const PredictionOutput& output, const Target& target, double floor) {
  const int y = observed_index(output, target);
  return kernel::loss(LossKind::cross_entropy, output.values(), y, {}, floor);
}

double squared_error(const PredictionOutput& output, const Target& target) {
  return kernel::loss(LossKind::squared_error, output.values(), 0, regression_target(output, target), 0.0);
}

double evaluate_loss(LossKind kind, const PredictionOutput& output, const Target& target, double floor) {
  return kind == LossKind::cross_entropy ? cross_entropy(output, target, floor) : squared_error(output, target);
}

std::vector<double> loss_output_gradient(LossKind kind, const PredictionOutput& output, const Target& target,
                                         double floor) {
  std::vector<double> grad(output.arity());
  if (kind == LossKind::cross_entropy) {
    kernel::loss_gradient(kind, output.values(), observed_index(output, target), {}, floor, grad);
  } else {
    kernel::loss_gradient(kind, output.values(), 0, regression_target(output, target), floor, grad);
  }
  return grad;
}

namespace kernel {

double loss(LossKind kind, std::span<const double> output, int observed, std::span<const double> target,
            double floor) {
  if (kind == LossKind::cross_entropy) {
    return -std::log(std::max(output[static_cast<std::size_t>(observed)], floor));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < output.size(); ++j) {
    const double r = output[j] - target[j];
    total += r * r;
  }
  return total;
}

void loss_gradient(LossKind kind, std::span<const double> output, int observed, std::span<const double> target,
                   double floor, std::span<double> grad) {
  if (kind == LossKind::cross_entropy) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto y = static_cast<std::size_t>(observed);
    grad[y] = -1.0 / std::max(output[y], floor);
    return;
  }
  for (std::size_t j = 0; j < output.size(); ++j) grad[j] = 2.0 * (output[j] - target[j]);
}

}  // namespace kernel

}  // namespace mixmax
