#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survscreen/dataset.hpp"

namespace survscreen {

inline constexpr double kSigmaFloor = 1e-8;

// Where the nuisances of each increment come from. Predictor selection is
// always prefix-based.
enum class Variant { prefix, full_sample };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct Selection {
  std::size_t k = 0;
  int sign = 1;
  double slope = 0.0;
};

// Chooses, for a growing prefix of an ordering, the predictor with the
// largest absolute IPCW slope Cov_j(U_k, delta X / G_j(X)) / Var_j(U_k),
// where G_j is the Kaplan-Meier censoring fit on the prefix.
//
// Per step the centered synthetic responses are scattered into a length-n
// weight vector indexed by original row, so each slope numerator is one
// contiguous dot product down a predictor column. Prefix sums of U and U^2
// per predictor are carried across steps. Ties go to the smallest index;
// predictors whose prefix variance is below the variance floor get slope 0.
class SelectionKernel {
 public:
  SelectionKernel(const SurvivalDataset& data, std::span<const std::size_t> order,
                  int threads = 1);

  // Selection on the first j rows of the ordering. Successive calls with
  // increasing j reuse the running sums.
  Selection select(std::size_t j);
  std::span<const double> slopes() const { return slopes_; }

 private:
  void reset();

  const SurvivalDataset& data_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;     // position of each row in the ordering
  std::vector<std::size_t> time_sorted_;  // rows by time, events before censorings
  int threads_;
  std::size_t included_ = 0;
  std::vector<double> sum_u_;
  std::vector<double> sum_uu_;
  std::vector<double> weights_;
  std::vector<double> slopes_;
};

Selection select_predictor(const SurvivalDataset& data, std::span<const std::size_t> order,
                           std::size_t j, int threads = 1);

struct PrefixTrace {
  std::size_t j = 0;      // prefix size; the increment is evaluated at row order[j]
  std::size_t k = 0;
  int m = 1;
  double sigma = 0.0;     // centered sd of IF* over the prefix
  double weight = 0.0;    // sigma_bar / sigma
  double one_step = 0.0;  // Psi_k + IF*_k(O_{j+1})
  double increment = 0.0; // weight * m * one_step
};

struct StabilizedResult {
  double s_star = 0.0;
  double sigma_bar = 0.0;
  std::vector<PrefixTrace> traces;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t q_n = 0;
  Variant variant = Variant::full_sample;
  std::uint64_t ordering_seed = 0;
};

// Stabilized one-step estimate of the largest absolute marginal slope over the
// ordering `order` (a permutation of 0..n-1), with prefixes j = q_n..n-1.
StabilizedResult stabilized_estimate(const SurvivalDataset& data, std::size_t q_n,
                                     Variant variant, std::span<const std::size_t> order,
                                     int threads = 1);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double p_value = 1.0;
};

Interval ci_pvalue(const StabilizedResult& result, double alpha);
Interval ci_pvalue(double s_star, double sigma_bar, std::size_t effective_n, double alpha);

std::vector<std::size_t> random_ordering(std::size_t n, std::uint64_t seed, std::uint64_t index);

struct MultiOrderingResult {
  std::vector<double> p_values;
  std::vector<StabilizedResult> results;
  std::size_t best = 0;  // ordering with the smallest p-value
  double min_p = 1.0;
  double adjusted_p = 1.0;  // min(1, R * min_p)
  bool reject = false;      // min_p < alpha / R
  const StabilizedResult& best_result() const { return results[best]; }
};

// R uniformly random orderings from streams keyed by (seed, r), combined by
// a Bonferroni correction of the smallest p-value.
MultiOrderingResult multi_ordering_test(const SurvivalDataset& data, std::size_t orderings,
                                        std::size_t q_n, Variant variant, double alpha,
                                        std::uint64_t seed, int threads = 1);

inline std::size_t default_q(std::size_t n) { return n / 2; }

}  // namespace survscreen
