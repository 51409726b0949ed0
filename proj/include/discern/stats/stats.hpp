#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "discern/common.hpp"

namespace discern::stats {

double mean(std::span<const double> x);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);
// (x - mean) / sd with the n - 1 sd. Throws DegenerateError on zero spread.
std::vector<double> zscore(std::span<const double> x);

struct CorrelationResult {
  double r = 0;
  double p_two_tailed = 1;
  std::size_t n = 0;
};

// Product-moment r; p from t = r sqrt((n-2)/(1-r^2)) on n - 2 df, two-tailed.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

enum class Outcome { ND, AR, AF };
std::string_view to_string(Outcome o);
inline constexpr std::array<Outcome, 3> kOutcomes{Outcome::ND, Outcome::AR, Outcome::AF};

// Trait <-> outcome correlations in E, A, C, N, O order.
struct CorrelationVector {
  Outcome outcome = Outcome::ND;
  std::array<CorrelationResult, kTraitCount> entries{};

  std::array<double, kTraitCount> values() const;
};

struct Coefficient {
  std::string name;
  double beta = 0;
  double standard_error = 0;
  double t = 0;
  double p_two_tailed = 1;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // predictor order
  Coefficient intercept;
  std::size_t n = 0;
  std::size_t df_residual = 0;
  double r_squared = 0;
  bool standardized = true;
};

struct Predictor {
  std::string name;
  std::span<const double> values;
};

// Multiple OLS with an intercept, all predictors entered together. When
// `standardized` the predictors and outcome are z-scored first so the slopes
// are standardized betas. Solved by Householder QR; standard errors use the
// unbiased residual variance and (X'X)^-1; t-tests on n - p - 1 df.
// Throws SingularDesignError naming collinear columns.
RegressionResult ols_regression(std::span<const Predictor> predictors, std::span<const double> outcome,
                                bool standardized = true);

enum class TestKind { KS, MWU };
std::string_view to_string(TestKind k);

struct TwoSampleTestResult {
  double statistic = 0;
  double p_two_tailed = 1;
  TestKind test_kind = TestKind::KS;
  std::size_t n1 = 0, n2 = 0;
  bool exact = false;
};

// D = sup |ECDF_a - ECDF_b|; p = kolmogorov_sf(sqrt(n1 n2 / (n1 + n2)) * D).
TwoSampleTestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

enum class MwuMethod { Auto, Exact, Normal };
inline constexpr std::size_t kMwuExactMaxCells = 400;

// U for sample a from midrank sums. Normal p uses the tie-corrected variance
// and a 0.5 continuity correction; the exact p is the permutation
// distribution of U given the observed tie pattern. Auto picks exact when
// n1 * n2 <= kMwuExactMaxCells.
TwoSampleTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                   MwuMethod method = MwuMethod::Auto);

enum class EffectBin { UpTo0_2 = 0, UpTo0_5, UpTo0_8, Above0_8 };
inline constexpr std::size_t kEffectBinCount = 4;
std::string_view to_string(EffectBin b);
// Bins on |d| with closed upper edges: [0, .2], (.2, .5], (.5, .8], (.8, inf).
EffectBin effect_bin(double d);

struct EffectSize {
  double d = 0;
  EffectBin bin = EffectBin::UpTo0_2;
};

// (mean_a - mean_b) / pooled sd.
EffectSize cohens_d(std::span<const double> a, std::span<const double> b);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

enum class CosineMask { All, SignificantOnly };
// SignificantOnly keeps the traits whose p in `reference` is below alpha.
double cosine_similarity(const CorrelationVector& v1, const CorrelationVector& v2, CosineMask mask,
                         const CorrelationVector& reference, double alpha = 0.05);

// "***" p < .001, "**" p < .01, "*" p < .05, "" otherwise.
std::string_view significance_stars(double p);

}  // namespace discern::stats
