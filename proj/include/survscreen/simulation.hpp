#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survscreen/dataset.hpp"

namespace survscreen {

enum class Model { N, A1, A2 };
enum class ErrorLaw { independent, dependent };
enum class CensoringLevel { none, light, heavy };

std::string to_string(Model m);
std::string to_string(ErrorLaw e);
std::string to_string(CensoringLevel c);
Model parse_model(const std::string& text);
ErrorLaw parse_error_law(const std::string& text);
CensoringLevel parse_censoring(const std::string& text);

// Target censoring fraction: none 0, light 0.10, heavy 0.30.
double censoring_target(CensoringLevel c);

// Log survival times from the AFT models
//   N:  T = eps
//   A1: T = U_1 / 4 + eps
//   A2: T = sum_j beta_j U_j + eps, beta_1..5 = 0.15, beta_6..10 = -0.1
// with exchangeable standard normal predictors (Corr = rho), eps ~ N(0, 1) or
// N(0, 0.7 (|U_1| + 0.7)) (second argument a variance), and censoring time
// C = log(Exp(lambda)).
struct ScenarioSpec {
  Model model = Model::N;
  ErrorLaw error = ErrorLaw::independent;
  CensoringLevel censoring = CensoringLevel::light;
  std::size_t n = 500;
  std::size_t p = 100;
  double rho = 0.75;
  std::uint64_t seed = 1;
  TauRule tau = TauRule::max_observed();
  bool standardize = true;

  void validate() const;
};

// Regression coefficients of T on U for the model (length p).
std::vector<double> model_coefficients(Model model, std::size_t p);

struct Scenario {
  SurvivalDataset data;
  // Population slopes Cov(U_k, T) / Var(U_k) = (1 - rho) beta_k + rho sum(beta).
  std::vector<double> true_slopes;
  double lambda = 0.0;  // 0 when uncensored
};

// Replicate `replicate` of the scenario; draws come from the stream keyed by
// (spec.seed, replicate).
Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t replicate = 0);

inline constexpr std::size_t kCalibrationDraws = 100000;
inline constexpr std::uint64_t kCalibrationSeed = 0x63616c6962ULL;
inline constexpr double kCalibrationTolerance = 0.005;

// Monte-Carlo censoring fraction P(C < T) at rate lambda.
double censoring_fraction(Model model, ErrorLaw error, double rho, double lambda,
                          std::size_t draws = kCalibrationDraws,
                          std::uint64_t seed = kCalibrationSeed);

// Bisection on log(lambda) against the Monte-Carlo censoring fraction
// (common random numbers, so the fraction is monotone in lambda). Results are
// cached per (model, error, rho, target, tol).
double calibrate_censoring_rate(Model model, ErrorLaw error, double rho, double target,
                                double tol = kCalibrationTolerance);

enum class Method { stabilized_prefix, stabilized_full, stabilized_multi, bonferroni, oracle };

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct MonteCarloConfig {
  Method method = Method::stabilized_full;
  std::size_t reps = 100;
  double alpha = 0.05;
  std::size_t orderings = 10;      // stabilized_multi only
  std::optional<std::size_t> q_n;  // default n / 2
  std::size_t oracle_k = 0;
  int threads = 1;
};

struct MonteCarloReport {
  ScenarioSpec spec;
  Method method = Method::stabilized_full;
  std::size_t reps = 0;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  double mean_runtime_ms = 0.0;
  double coverage = 0.0;             // NaN when no replicate qualifies
  std::size_t coverage_reps = 0;
  double lambda = 0.0;
  std::size_t orderings = 1;
  std::vector<double> statistics;    // standardized statistic per replicate
  std::vector<double> p_values;      // decision p-value per replicate (raw min p)
};

MonteCarloReport monte_carlo_rejection(const ScenarioSpec& spec, const MonteCarloConfig& config);

std::string report_csv_header();
std::string report_csv_row(const MonteCarloReport& report);

}  // namespace survscreen
