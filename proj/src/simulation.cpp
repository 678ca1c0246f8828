#include "survscreen/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>

#include "survscreen/errors.hpp"
#include "survscreen/estimators.hpp"
#include "survscreen/rng.hpp"
#include "survscreen/stabilized.hpp"

namespace survscreen {

std::string to_string(Model m) {
  switch (m) {
    case Model::N: return "N";
    case Model::A1: return "A1";
    case Model::A2: return "A2";
  }
  return "?";
}

std::string to_string(ErrorLaw e) {
  return e == ErrorLaw::independent ? "independent" : "dependent";
}

std::string to_string(CensoringLevel c) {
  switch (c) {
    case CensoringLevel::none: return "none";
    case CensoringLevel::light: return "light";
    case CensoringLevel::heavy: return "heavy";
  }
  return "?";
}

Model parse_model(const std::string& text) {
  if (text == "N") return Model::N;
  if (text == "A1") return Model::A1;
  if (text == "A2") return Model::A2;
  throw InputError("unknown model '" + text + "' (expected N, A1 or A2)");
}

ErrorLaw parse_error_law(const std::string& text) {
  if (text == "independent") return ErrorLaw::independent;
  if (text == "dependent") return ErrorLaw::dependent;
  throw InputError("unknown error law '" + text + "'");
}

CensoringLevel parse_censoring(const std::string& text) {
  if (text == "none") return CensoringLevel::none;
  if (text == "light") return CensoringLevel::light;
  if (text == "heavy") return CensoringLevel::heavy;
  throw InputError("unknown censoring level '" + text + "'");
}

double censoring_target(CensoringLevel c) {
  switch (c) {
    case CensoringLevel::none: return 0.0;
    case CensoringLevel::light: return 0.10;
    case CensoringLevel::heavy: return 0.30;
  }
  return 0.0;
}

void ScenarioSpec::validate() const {
  if (n < 2) throw InputError("scenario needs n >= 2");
  if (p < 1) throw InputError("scenario needs p >= 1");
  if (model == Model::A2 && p < 10) throw InputError("model A2 needs p >= 10");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
}

std::vector<double> model_coefficients(Model model, std::size_t p) {
  std::vector<double> beta(p, 0.0);
  if (model == Model::A1) beta[0] = 0.25;
  if (model == Model::A2) {
    for (std::size_t j = 0; j < std::min<std::size_t>(p, 10); ++j) beta[j] = j < 5 ? 0.15 : -0.1;
  }
  return beta;
}

namespace {

std::size_t active_predictors(Model model) {
  switch (model) {
    case Model::N: return 0;
    case Model::A1: return 1;
    case Model::A2: return 10;
  }
  return 0;
}

// Log survival times and the log unit exponentials that become censoring
// times. Predictors are drawn first (shared factor, then each column in
// turn); with `columns` all p are kept, otherwise only those in the model.
struct Draws {
  std::vector<double> t;
  std::vector<double> log_exp;  // log of a unit exponential per subject
};

double error_sd(ErrorLaw law, double u1) {
  return law == ErrorLaw::independent ? 1.0 : std::sqrt(0.7 * (std::fabs(u1) + 0.7));
}

Draws draw_outcomes(Model model, ErrorLaw error, double rho, std::size_t count, std::size_t p,
                    CounterRng& rng, std::vector<double>* columns) {
  std::normal_distribution<double> normal;
  const std::size_t needed = std::max<std::size_t>(active_predictors(model), 1);
  const std::size_t width = columns ? p : std::min(p, needed);
  const double shared = std::sqrt(rho);
  const double own = std::sqrt(1.0 - rho);

  std::vector<double> z0(count);
  for (auto& z : z0) z = normal(rng);
  std::vector<double> local;
  std::vector<double>& u = columns ? *columns : local;
  u.assign(count * width, 0.0);
  for (std::size_t k = 0; k < width; ++k) {
    double* col = u.data() + k * count;
    for (std::size_t i = 0; i < count; ++i) col[i] = shared * z0[i] + own * normal(rng);
  }

  const auto beta = model_coefficients(model, width);
  Draws d;
  d.t.resize(count);
  d.log_exp.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < std::min(active_predictors(model), width); ++k) {
      mean += beta[k] * u[k * count + i];
    }
    d.t[i] = mean + error_sd(error, u[i]) * normal(rng);
  }
  for (std::size_t i = 0; i < count; ++i) d.log_exp[i] = std::log(-std::log(rng.uniform()));
  return d;
}

}  // namespace

Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t replicate) {
  spec.validate();
  const double target = censoring_target(spec.censoring);
  const double lambda =
      target > 0.0 ? calibrate_censoring_rate(spec.model, spec.error, spec.rho, target) : 0.0;

  CounterRng rng(stream_key(spec.seed, 0x73636e6172696fULL, replicate));
  std::vector<double> columns;
  const Draws d = draw_outcomes(spec.model, spec.error, spec.rho, spec.n, spec.p, rng, &columns);

  std::vector<double> time(spec.n), status(spec.n, 1.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    time[i] = d.t[i];
    if (lambda > 0.0) {
      const double c = d.log_exp[i] - std::log(lambda);
      if (c < d.t[i]) {
        time[i] = c;
        status[i] = 0.0;
      }
    }
  }

  const auto beta = model_coefficients(spec.model, spec.p);
  double beta_sum = 0.0;
  for (double b : beta) beta_sum += b;
  std::vector<double> truth(spec.p);
  for (std::size_t k = 0; k < spec.p; ++k) {
    truth[k] = (1.0 - spec.rho) * beta[k] + spec.rho * beta_sum;
  }

  return Scenario{make_dataset(std::move(time), std::move(status), std::move(columns), spec.p,
                               spec.tau, spec.standardize),
                  std::move(truth), lambda};
}

double censoring_fraction(Model model, ErrorLaw error, double rho, double lambda,
                          std::size_t draws, std::uint64_t seed) {
  CounterRng rng(stream_key(seed, 0x63656e73ULL));
  const Draws d = draw_outcomes(model, error, rho, draws, 10, rng, nullptr);
  const double log_lambda = std::log(lambda);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < draws; ++i) censored += (d.log_exp[i] - log_lambda < d.t[i]);
  return static_cast<double>(censored) / static_cast<double>(draws);
}

double calibrate_censoring_rate(Model model, ErrorLaw error, double rho, double target,
                                double tol) {
  if (!(target > 0.0 && target < 1.0)) throw InputError("censoring target must lie in (0, 1)");
  if (!(tol > 0.0)) throw InputError("calibration tolerance must be positive");

  using Key = std::tuple<int, int, double, double, double>;
  static std::mutex mutex;
  static std::map<Key, double> cache;
  const Key key{static_cast<int>(model), static_cast<int>(error), rho, target, tol};
  // Held for the whole computation: concurrent callers wait for one result.
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  CounterRng rng(stream_key(kCalibrationSeed, 0x63656e73ULL));
  // A2 draws need ten predictors; the others need at most one.
  const Draws d = draw_outcomes(model, error, rho, kCalibrationDraws, 10, rng, nullptr);
  std::vector<double> gap(kCalibrationDraws);
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = d.log_exp[i] - d.t[i];
  auto fraction = [&](double log_lambda) {
    std::size_t c = 0;
    for (double g : gap) c += (g < log_lambda);
    return static_cast<double>(c) / static_cast<double>(gap.size());
  };

  double lo = -40.0, hi = 40.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = fraction(mid);
    if (std::fabs(f - target) <= tol) {
      const double lambda = std::exp(mid);
      cache.emplace(key, lambda);
      return lambda;
    }
    (f < target ? lo : hi) = mid;
  }
  throw NumericalError("censoring calibration failed to bracket target " +
                       std::to_string(target));
}

std::string to_string(Method m) {
  switch (m) {
    case Method::stabilized_prefix: return "stabilized_prefix";
    case Method::stabilized_full: return "stabilized_full";
    case Method::stabilized_multi: return "stabilized_multiR";
    case Method::bonferroni: return "bonferroni";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "stabilized_prefix") return Method::stabilized_prefix;
  if (text == "stabilized_full") return Method::stabilized_full;
  if (text == "stabilized_multiR" || text == "stabilized_multi") return Method::stabilized_multi;
  if (text == "bonferroni") return Method::bonferroni;
  if (text == "oracle") return Method::oracle;
  throw InputError("unknown method '" + text + "'");
}

namespace {

struct ReplicateOutcome {
  bool reject = false;
  double statistic = 0.0;
  double p_value = 1.0;
  bool coverage_counted = false;
  bool covered = false;
  double runtime_ms = 0.0;
};

bool in_argmax(const std::vector<double>& truth, std::size_t k) {
  double best = 0.0;
  for (double t : truth) best = std::max(best, std::fabs(t));
  return std::fabs(std::fabs(truth[k]) - best) <= 1e-12;
}

ReplicateOutcome run_replicate(const ScenarioSpec& spec, const MonteCarloConfig& config,
                               std::uint64_t rep, int inner_threads) {
  const Scenario sc = generate_scenario(spec, rep);
  const auto& data = sc.data;
  const std::size_t q = config.q_n.value_or(default_q(data.n()));
  double psi = 0.0;
  for (double t : sc.true_slopes) psi = std::max(psi, std::fabs(t));

  ReplicateOutcome out;
  const auto start = std::chrono::steady_clock::now();
  switch (config.method) {
    case Method::stabilized_prefix:
    case Method::stabilized_full:
    case Method::stabilized_multi: {
      const Variant v =
          config.method == Method::stabilized_prefix ? Variant::prefix : Variant::full_sample;
      const std::size_t R = config.method == Method::stabilized_multi ? config.orderings : 1;
      const auto res = multi_ordering_test(data, R, q, v, config.alpha,
                                           stream_key(spec.seed, 0x6f726465ULL, rep),
                                           inner_threads);
      const auto& best = res.best_result();
      out.reject = res.reject;
      out.p_value = res.min_p;
      out.statistic = best.s_star * std::sqrt(static_cast<double>(best.n - best.q_n)) /
                      best.sigma_bar;
      const Interval ci = ci_pvalue(best, config.alpha);
      out.coverage_counted = in_argmax(sc.true_slopes, best.traces.back().k);
      out.covered = ci.low <= psi && psi <= ci.high;
      break;
    }
    case Method::bonferroni: {
      const auto res = bonferroni_test(data, config.alpha, inner_threads);
      out.reject = res.reject;
      out.p_value = res.min_p;
      out.statistic = res.statistics[res.best];
      out.coverage_counted = true;
      const double truth = sc.true_slopes[res.best];
      out.covered = res.best_result.ci_low <= truth && truth <= res.best_result.ci_high;
      break;
    }
    case Method::oracle: {
      const auto res = oracle_test(data, config.oracle_k, config.alpha);
      out.reject = res.reject;
      out.p_value = res.result.p_value;
      out.statistic = res.result.statistic;
      out.coverage_counted = true;
      const double truth = sc.true_slopes[config.oracle_k];
      out.covered = res.result.ci_low <= truth && truth <= res.result.ci_high;
      break;
    }
  }
  out.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

MonteCarloReport monte_carlo_rejection(const ScenarioSpec& spec, const MonteCarloConfig& config) {
  spec.validate();
  if (config.reps < 1) throw InputError("need at least one replicate");
  if (config.method == Method::oracle && config.oracle_k >= spec.p) {
    throw InputError("oracle predictor index out of range");
  }
  const double target = censoring_target(spec.censoring);
  MonteCarloReport report;
  report.spec = spec;
  report.method = config.method;
  report.reps = config.reps;
  report.orderings = config.method == Method::stabilized_multi ? config.orderings : 1;
  report.lambda =
      target > 0.0 ? calibrate_censoring_rate(spec.model, spec.error, spec.rho, target) : 0.0;

  std::vector<ReplicateOutcome> outcomes(config.reps);
  std::vector<std::exception_ptr> errors(config.reps);
  const int threads = std::max(1, config.threads);
  const bool outer = config.reps > 1;
  const auto reps = static_cast<std::ptrdiff_t>(config.reps);

#pragma omp parallel for num_threads(outer ? threads : 1) schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    try {
      outcomes[r] = run_replicate(spec, config, static_cast<std::uint64_t>(r),
                                  outer ? 1 : threads);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const InputError& e) {
      throw InputError("replicate " + std::to_string(r) + " (seed " + std::to_string(spec.seed) +
                       "): " + e.what());
    } catch (const std::exception& e) {
      throw NumericalError("replicate " + std::to_string(r) + " (seed " +
                           std::to_string(spec.seed) + "): " + e.what());
    }
  }

  double runtime = 0.0;
  std::size_t covered = 0;
  for (const auto& o : outcomes) {
    report.rejections += o.reject ? 1 : 0;
    runtime += o.runtime_ms;
    if (o.coverage_counted) {
      ++report.coverage_reps;
      covered += o.covered ? 1 : 0;
    }
    report.statistics.push_back(o.statistic);
    report.p_values.push_back(o.p_value);
  }
  const double reps_d = static_cast<double>(config.reps);
  report.rejection_rate = static_cast<double>(report.rejections) / reps_d;
  report.mean_runtime_ms = runtime / reps_d;
  report.coverage = report.coverage_reps > 0
                        ? static_cast<double>(covered) / static_cast<double>(report.coverage_reps)
                        : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::string report_csv_header() {
  return "model,error,censoring,n,p,method,reps,rejection_rate,coverage,mean_runtime_ms";
}

std::string report_csv_row(const MonteCarloReport& r) {
  std::ostringstream os;
  os << to_string(r.spec.model) << ',' << to_string(r.spec.error) << ','
     << to_string(r.spec.censoring) << ',' << r.spec.n << ',' << r.spec.p << ','
     << to_string(r.method) << ',' << r.reps << ',' << r.rejection_rate << ',';
  if (std::isnan(r.coverage)) {
    os << "NA";
  } else {
    os << r.coverage;
  }
  os << ',' << r.mean_runtime_ms;
  return os.str();
}

}  // namespace survscreen
