#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mixmax {

/// Outcome of one verification suite. `lines` is a human-readable log, one
/// line per instance; `worst_margin` is the suite's headline number (its
/// meaning is given by `margin_label`).
struct SuiteResult {
  std::string name;
  bool passed = false;
  double worst_margin = 0.0;
  std::string margin_label;
  std::vector<std::string> lines;
};

struct GradientSuiteParams {
  std::size_t pairs = 100;
  double h = 1e-5;
  double tolerance = 1e-5;
  std::size_t markov_per_length = 20;
  std::size_t toy_samples = 500;
};

/// Analytic tangent gradients against central differences, cycling through
/// 3-group V=4 Markov problems, binary toys (with and without covariate
/// shift) and regression toys.
SuiteResult gradient_suite(std::uint64_t seed, const GradientSuiteParams& params = {});

struct ConcavitySuiteParams {
  std::size_t trials = 100;
  double tolerance = 1e-9;
  std::size_t quadrature_nodes = 2000;
};

/// Concavity probe on population objectives with exact oracles: both binary
/// toys, both regression toys and a 3-group V=3, L=4 Markov family.
SuiteResult concavity_suite(std::uint64_t seed, const ConcavitySuiteParams& params = {});

struct UnbiasednessSuiteParams {
  std::size_t datasets = 1000;
  std::size_t per_length = 10;
  std::size_t groups = 3;
  std::size_t vocab = 3;
  std::size_t max_length = 4;
};

/// Mean EMixMax gradient at uniform weights over resampled datasets against
/// the enumerated population gradient.
SuiteResult unbiasedness_suite(std::uint64_t seed, const UnbiasednessSuiteParams& params = {});

struct OracleSuiteParams {
  std::size_t instances = 10;
  std::size_t per_length = 50;
  double l1_tolerance = 0.02;
  double objective_tolerance = 1e-3;
};

/// Solver (eta 2 for 10 steps, then eta 0.5 for 100 more) against grid
/// search on 2- and 3-group Markov instances with magnitude 1.
SuiteResult oracle_suite(std::uint64_t seed, const OracleSuiteParams& params = {});

const std::vector<std::string>& known_suites();

/// Dispatches by name at default parameters; throws DomainError when unknown.
SuiteResult run_suite(std::string_view name, std::uint64_t seed);

}  // namespace mixmax
