#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mixmax {

enum class LossKind { cross_entropy, squared_error };

/// "cross_entropy" | "squared_error".
std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

enum class OutputKind {
  probabilities,  // distribution over m labels
  likelihood,     // probability a generative model assigns to the observed outcome
  regression,     // real vector
};

/// A predictor's output at one sample.
class PredictionOutput {
 public:
  /// Label distribution; entries in [0, 1] summing to 1 within 1e-9.
  static PredictionOutput probabilities(std::vector<double> probs);
  /// Probability in [0, 1] of the sample's own outcome (sequence models).
  static PredictionOutput likelihood(double probability);
  static PredictionOutput regression(std::vector<double> values);

  OutputKind kind() const { return kind_; }
  std::size_t arity() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const PredictionOutput&) const = default;

 private:
  PredictionOutput(OutputKind kind, std::vector<double> values) : kind_(kind), values_(std::move(values)) {}

  OutputKind kind_;
  std::vector<double> values_;
};

struct Label {
  int index = 0;
  bool operator==(const Label&) const = default;
};
using RealVector = std::vector<double>;
using TokenSequence = std::vector<int>;

/// A class label, a regression target, or an observed token sequence.
using Target = std::variant<Label, RealVector, TokenSequence>;

/// -log(max(o[y], floor)). Accepts a label distribution with a label target,
/// or a likelihood output with any target (the likelihood already refers to it).
double cross_entropy(const PredictionOutput& output, const Target& target,
                     double floor = kProbabilityFloor);

/// Sum of squared coordinate errors.
double squared_error(const PredictionOutput& output, const Target& target);

double evaluate_loss(LossKind kind, const PredictionOutput& output, const Target& target,
                     double floor = kProbabilityFloor);

/// Derivative of the loss with respect to the output coordinates.
/// Cross-entropy: -1/max(o[y], floor) at y and 0 elsewhere. Squared error: 2(o - y).
std::vector<double> loss_output_gradient(LossKind kind, const PredictionOutput& output,
                                         const Target& target, double floor = kProbabilityFloor);

// Unchecked kernels over raw output coordinates. `observed` is the label index
// (0 for likelihood outputs); `target` is the regression target and is ignored
// by cross-entropy.
namespace kernel {

double loss(LossKind kind, std::span<const double> output, int observed, std::span<const double> target,
            double floor);

/// Writes d loss / d output into `grad` (same length as output).
void loss_gradient(LossKind kind, std::span<const double> output, int observed,
                   std::span<const double> target, double floor, std::span<double> grad);

}  // namespace kernel

}  // namespace mixmax
