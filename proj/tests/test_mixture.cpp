#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mixmax/error.hpp"
#include "mixmax/mixture.hpp"

using namespace mixmax;
using namespace testing;
using doctest::Approx;

namespace {

GroupOracle constant_binary(double p1, double density = 1.0) {
  return binary_oracle([p1](double) { return p1; }, [density](double) { return density; });
}

GroupOracleSet pair(GroupOracle a, GroupOracle b, ShiftMode mode) { return GroupOracleSet({a, b}, mode); }

MixtureWeights weights(std::vector<double> w) { return MixtureWeights::from_values(std::move(w)); }

// Three binary groups with smooth conditionals and positive densities on [0, 1].
GroupOracleSet smooth_set(ShiftMode mode) {
  return GroupOracleSet({binary_oracle([](double x) { return 0.2 + 0.6 * x * x; }, [](double x) { return 0.5 + x; }),
                         binary_oracle([](double x) { return 0.9 - 0.5 * x; }, [](double x) { return 1.5 - x; }),
                         binary_oracle([](double x) { return 0.5 + 0.3 * std::sin(3 * x); },
                                       [](double x) { return 1.0 + 0.5 * std::cos(5 * x); })},
                        mode);
}

}  // namespace

TEST_CASE("mixture predict examples") {
  const Sample s = labeled(0.3, 0);

  SUBCASE("vertex reproduces the first predictor") {
    for (auto mode : {ShiftMode::no_shift, ShiftMode::covariate_shift}) {
      const auto set = pair(constant_binary(0.2, 2.0), constant_binary(0.8, 1.0), mode);
      const PredictionOutput out = mixture_predict(weights({1.0, 0.0}), set, s);
      CHECK(out[1] == 0.2);
      CHECK(out[0] == 0.8);
    }
  }
  SUBCASE("no shift, balanced") {
    const auto set = pair(constant_binary(0.2), constant_binary(0.8), ShiftMode::no_shift);
    CHECK(mixture_predict(uniform(2), set, s)[1] == Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("covariate shift, balanced") {
    const auto set = pair(constant_binary(0.3, 2.0), constant_binary(0.9, 1.0), ShiftMode::covariate_shift);
    CHECK(mixture_predict(uniform(2), set, s)[1] == Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("mixture density examples") {
  const auto set = pair(constant_binary(0.3, 2.0), constant_binary(0.9, 1.0), ShiftMode::covariate_shift);
  CHECK(mixture_density(uniform(2), set, {0.1}) == Approx(1.5));
  CHECK(mixture_density(weights({1.0, 0.0}), set, {0.1}) == 2.0);
  CHECK(mixture_density(weights({0.0, 1.0}), set, {0.1}) == 1.0);
  const auto unshifted = pair(constant_binary(0.3), constant_binary(0.9), ShiftMode::no_shift);
  CHECK_THROWS_AS(mixture_density(uniform(2), unshifted, {0.1}), DomainError);
}

TEST_CASE("degenerate points and dimension errors") {
  const auto set = pair(constant_binary(0.3, 0.0), constant_binary(0.9, 0.0), ShiftMode::covariate_shift);
  try {
    (void)mixture_predict(uniform(2), set, labeled(0.25, 0));
    FAIL("expected a degenerate point error");
  } catch (const DegeneratePointError& e) {
    CHECK(std::string(e.what()).find("0.25") != std::string::npos);
  }
  // Zero density only where the weight is zero is fine.
  const auto half = pair(constant_binary(0.3, 0.0), constant_binary(0.9, 1.0), ShiftMode::covariate_shift);
  CHECK(mixture_predict(weights({0.5, 0.5}), half, labeled(0.25, 0))[1] == Approx(0.9));
  CHECK_THROWS_AS(mixture_predict(weights({1.0, 0.0}), half, labeled(0.25, 0)), DegeneratePointError);

  const auto ok = pair(constant_binary(0.3), constant_binary(0.9), ShiftMode::no_shift);
  CHECK_THROWS_AS(mixture_predict(uniform(3), ok, labeled(0.1, 0)), DimensionError);
  GroupOracle no_density;
  no_density.predict = [](const Sample&) { return PredictionOutput::probabilities({0.5, 0.5}); };
  CHECK_THROWS_AS(GroupOracleSet({no_density, no_density}, ShiftMode::covariate_shift), DomainError);
  CHECK_THROWS_AS(GroupOracleSet({}, ShiftMode::no_shift), DimensionError);
}

TEST_CASE("no-shift gradient components are the group predictions") {
  const auto set = smooth_set(ShiftMode::no_shift);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit;
  for (int t = 0; t < 20; ++t) {
    const Sample s = labeled(unit(rng), 1);
    const auto w = MixtureWeights::normalized({unit(rng), unit(rng), unit(rng)});
    const auto grad = mixture_predict_gradient(w, set, s);
    for (std::size_t p = 0; p < 3; ++p) {
      const PredictionOutput f = set[p].predict(s);
      CHECK(grad[p][0] == f[0]);
      CHECK(grad[p][1] == f[1]);
    }
  }
}

TEST_CASE("equal densities reduce covariate shift to the no-shift formula") {
  auto same_density = [](double x) { return 0.5 + x; };
  const GroupOracleSet shifted({binary_oracle([](double x) { return x; }, same_density),
                                binary_oracle([](double x) { return 1 - x * x; }, same_density)},
                               ShiftMode::covariate_shift);
  const GroupOracleSet plain({binary_oracle([](double x) { return x; }), binary_oracle([](double x) { return 1 - x * x; })},
                             ShiftMode::no_shift);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit;
  for (int t = 0; t < 50; ++t) {
    const Sample s = labeled(unit(rng), 0);
    const auto w = MixtureWeights::normalized({unit(rng) + 0.01, unit(rng) + 0.01});
    const auto a = mixture_predict(w, shifted, s), b = mixture_predict(w, plain, s);
    CHECK(a[0] == Approx(b[0]).epsilon(1e-14));
    CHECK(a[1] == Approx(b[1]).epsilon(1e-14));
    // Raw partials differ from f_p by the common offset f_lambda, which
    // vanishes along tangent directions.
    const auto ga = mixture_predict_gradient(w, shifted, s), gb = mixture_predict_gradient(w, plain, s);
    CHECK(ga[0][1] - ga[1][1] == Approx(gb[0][1] - gb[1][1]).epsilon(1e-12));
    CHECK(ga[0][1] == Approx(gb[0][1] - b[1]).epsilon(1e-12));
  }
}

TEST_CASE("mixture gradient matches tangent finite differences") {
  const double h = 1e-6;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit;
  for (auto mode : {ShiftMode::no_shift, ShiftMode::covariate_shift}) {
    const auto set = smooth_set(mode);
    for (int t = 0; t < 100; ++t) {
      const Sample s = labeled(unit(rng), 0);
      const std::vector<double> raw{unit(rng) + 0.05, unit(rng) + 0.05, unit(rng) + 0.05};
      const auto w = MixtureWeights::normalized(raw);
      const auto grad = mixture_predict_gradient(w, set, s);
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          if (i == j) continue;
          auto up = w.as_vector(), down = w.as_vector();
          const double d = h / std::sqrt(2.0);
          up[i] += d, up[j] -= d, down[i] -= d, down[j] += d;
          const double fd =
              (reference_mixture(up, set, s)[1] - reference_mixture(down, set, s)[1]) / (2 * h);
          const double analytic = (grad[i][1] - grad[j][1]) / std::sqrt(2.0);
          CHECK(std::abs(fd - analytic) <= 1e-5 * std::max({std::abs(fd), std::abs(analytic), 1e-6}));
        }
      }
    }
  }
}

TEST_CASE("gradient at a vertex under covariate shift") {
  const auto set = smooth_set(ShiftMode::covariate_shift);
  const Sample s = labeled(0.4, 0);
  const auto w = MixtureWeights::vertex(3, 0);
  const auto grad = mixture_predict_gradient(w, set, s);
  // One-sided difference into the simplex along e_2 - e_1.
  const double h = 1e-7;
  const auto base = reference_mixture(w.as_vector(), set, s);
  const auto moved = reference_mixture({1.0 - h, h, 0.0}, set, s);
  const double fd = (moved[1] - base[1]) / h;
  CHECK(fd == Approx(grad[1][1] - grad[0][1]).epsilon(1e-5));
}

TEST_CASE("mixture stays on the simplex and between its components") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit;
  for (auto mode : {ShiftMode::no_shift, ShiftMode::covariate_shift}) {
    const auto set = smooth_set(mode);
    for (int t = 0; t < 300; ++t) {
      const Sample s = labeled(unit(rng), 0);
      const auto w = MixtureWeights::normalized({unit(rng), unit(rng), unit(rng) + 1e-3});
      const auto out = mixture_predict(w, set, s);
      CHECK(out[0] + out[1] == Approx(1.0).epsilon(1e-9));
      for (std::size_t j = 0; j < 2; ++j) {
        double lo = 1.0, hi = 0.0;
        for (std::size_t p = 0; p < 3; ++p) {
          lo = std::min(lo, set[p].predict(s)[j]);
          hi = std::max(hi, set[p].predict(s)[j]);
        }
        CHECK(out[j] >= lo - 1e-15);
        CHECK(out[j] <= hi + 1e-15);
      }
    }
  }
}

TEST_CASE("regression mixtures") {
  const GroupOracleSet set({regression_oracle([](double x) { return x; }), regression_oracle([](double) { return 2.0; })},
                           ShiftMode::no_shift);
  const auto out = mixture_predict(MixtureWeights::from_values({0.25, 0.75}), set, valued(0.4, 0.0));
  CHECK(out.kind() == OutputKind::regression);
  CHECK(out[0] == Approx(0.25 * 0.4 + 0.75 * 2.0));
}
