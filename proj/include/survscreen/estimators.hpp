#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "survscreen/dataset.hpp"
#include "survscreen/kaplan_meier.hpp"
#include "survscreen/residual_life.hpp"

namespace survscreen {

// Estimated features of P needed by the influence functions of the slope of
// one predictor: the censoring fit with its synthetic responses, the
// residual-life regression and the moments of U under the predictor's
// empirical distribution. Q and E are fit on `fit_rows`; the censoring fit
// may come from a larger sample.
struct NuisanceBundle {
  std::shared_ptr<const StratifiedCensoringFit> censoring;
  std::shared_ptr<const SyntheticResponses> y;
  ResidualLifeModel rl;
  std::size_t k = 0;
  std::size_t fit_size = 0;
  double u_mean = 0.0;
  double u_var = 0.0;
  double cov_u_e = 0.0;  // Cov_Q(U, E(U))
  double e_mean = 0.0;   // Q[E(U)]

  // Per stratum and jump m: running sums over jumps <= m of
  // (a - b * center) dLambda and b dLambda, so that the compensator of
  // E(u, .) up to x is level + u * slope.
  std::vector<std::vector<double>> cum_level;
  std::vector<std::vector<double>> cum_slope;

  double psi_plugin() const { return cov_u_e / u_var; }
};

NuisanceBundle make_nuisance(const SurvivalDataset& data, std::size_t k,
                             std::shared_ptr<const StratifiedCensoringFit> censoring,
                             std::shared_ptr<const SyntheticResponses> y,
                             std::span<const std::size_t> fit_rows);

// Attaches a censoring fit to a bundle whose residual-life model is already
// set, precomputing the per-jump sums used by residual_integral.
void bind_censoring(NuisanceBundle& b, std::shared_ptr<const StratifiedCensoringFit> censoring,
                    std::shared_ptr<const SyntheticResponses> y);

// Integral of E(u, .) against the observation's censoring martingale
// residual, using the bundle's cumulative sums.
double residual_integral(const Observation& obs, double u, const NuisanceBundle& b);

double if_ipw(double u, double y, const NuisanceBundle& b);
double if_car(const Observation& obs, double u, const NuisanceBundle& b);
double if_star(const Observation& obs, double u, double y, const NuisanceBundle& b);

// Cov(U, Y) / Var(U) with divisor n.
double ksv_slope(std::span<const double> u, std::span<const double> y,
                 double var_floor = kVarianceFloor);

struct OneStepConfig {
  std::optional<std::size_t> prefix;  // fit Q and E on the first j rows only
  Coarsening coarsening = Coarsening::single();
  double alpha = 0.05;
};

struct OneStepResult {
  std::size_t k = 0;
  double psi_plugin = 0.0;
  double s_onestep = 0.0;
  std::vector<double> if_values;
  double sigma_hat = 0.0;  // sqrt of the uncentered second moment of if_values
  double statistic = 0.0;  // sqrt(n) s_onestep / sigma_hat
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

// Full-sample pieces shared by every predictor: the censoring fit and the
// synthetic responses.
class OneStepContext {
 public:
  explicit OneStepContext(const SurvivalDataset& data,
                          const Coarsening& coarsening = Coarsening::single());

  const SurvivalDataset& data() const { return *data_; }
  const std::shared_ptr<const StratifiedCensoringFit>& censoring() const { return censoring_; }
  const std::shared_ptr<const SyntheticResponses>& responses() const { return y_; }
  std::span<const std::size_t> all_rows() const { return rows_; }

  NuisanceBundle bundle(std::size_t k) const;
  // Influence-function values IF*(O_i) for every row under the full-sample
  // bundle of predictor k.
  std::vector<double> efficient_if(const NuisanceBundle& b) const;
  OneStepResult one_step(std::size_t k, double alpha = 0.05) const;

 private:
  const SurvivalDataset* data_;
  std::shared_ptr<const StratifiedCensoringFit> censoring_;
  std::shared_ptr<const SyntheticResponses> y_;
  std::vector<std::size_t> rows_;
};

OneStepResult one_step(const SurvivalDataset& data, std::size_t k,
                       const OneStepConfig& config = {});

struct OracleResult {
  OneStepResult result;
  bool reject = false;
};

OracleResult oracle_test(const SurvivalDataset& data, std::size_t k, double alpha = 0.05);

struct BonferroniResult {
  std::vector<double> statistics;  // B_k
  std::vector<double> p_values;
  std::size_t best = 0;            // index of the smallest p-value
  double min_p = 1.0;
  double adjusted_p = 1.0;         // min(1, p * min_p)
  bool reject = false;             // min_p < alpha / p
  OneStepResult best_result;
};

BonferroniResult bonferroni_test(const SurvivalDataset& data, double alpha = 0.05,
                                 int threads = 1);

// Sup over a uniform grid of m in [-bound, bound] of the sample second moment
// of IF* + IF_m, IF_m(o) = (cov_u_e - m) / Var^2 * ((u - mean)^2 - Var).
double conservative_variance(const SurvivalDataset& data, std::size_t k, double bound,
                             int grid_size = 101);

// Default grid half-width: 4 sd(E(U)); falls back to 4 sd(U) sd(Y) when the
// fitted line is flat.
double default_variance_bound(const SurvivalDataset& data, std::size_t k);

}  // namespace survscreen
