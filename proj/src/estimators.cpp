#include "survscreen/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include "survscreen/errors.hpp"
#include "survscreen/normal.hpp"

namespace survscreen {

namespace {

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// Relative tolerance for the agreement of the two algebraic forms of the
// one-step estimator.
constexpr double kFormTolerance = 1e-8;

}  // namespace

NuisanceBundle make_nuisance(const SurvivalDataset& data, std::size_t k,
                             std::shared_ptr<const StratifiedCensoringFit> censoring,
                             std::shared_ptr<const SyntheticResponses> y,
                             std::span<const std::size_t> fit_rows) {
  if (fit_rows.size() < 2) throw InputError("nuisance fit needs at least 2 rows");
  NuisanceBundle b;
  b.k = k;
  b.fit_size = fit_rows.size();
  auto col = data.column(k);
  const double m = static_cast<double>(fit_rows.size());
  double sum = 0.0;
  for (std::size_t i : fit_rows) sum += col[i];
  b.u_mean = sum / m;
  double ss = 0.0;
  for (std::size_t i : fit_rows) ss += (col[i] - b.u_mean) * (col[i] - b.u_mean);
  b.u_var = ss / m;
  if (!(b.u_var >= kVarianceFloor)) {
    throw NumericalError("predictor '" + data.names()[k] + "' has variance " +
                         std::to_string(b.u_var) + " below the floor on the fitting sample");
  }

  b.rl = fit_residual_life(data, *y, k, fit_rows);
  const double a0 = b.rl.intercepts[0];
  const double b0 = b.rl.slopes[0];
  const double c0 = b.rl.centers[0];
  b.e_mean = a0 + b0 * (b.u_mean - c0);
  b.cov_u_e = b0 * b.u_var;

  bind_censoring(b, std::move(censoring), std::move(y));
  return b;
}

void bind_censoring(NuisanceBundle& b, std::shared_ptr<const StratifiedCensoringFit> censoring,
                    std::shared_ptr<const SyntheticResponses> y) {
  b.cum_level.assign(censoring->strata.size(), {});
  b.cum_slope.assign(censoring->strata.size(), {});
  for (std::size_t g = 0; g < censoring->strata.size(); ++g) {
    const auto& km = censoring->strata[g];
    auto& level = b.cum_level[g];
    auto& slope = b.cum_slope[g];
    level.resize(km.jump_times.size());
    slope.resize(km.jump_times.size());
    double acc_level = 0.0, acc_slope = 0.0;
    for (std::size_t j = 0; j < km.jump_times.size(); ++j) {
      const std::size_t e = b.rl.entry(km.jump_times[j]);
      const double dl = km.hazard_increments[j];
      acc_level += (b.rl.intercepts[e] - b.rl.slopes[e] * b.rl.centers[e]) * dl;
      acc_slope += b.rl.slopes[e] * dl;
      level[j] = acc_level;
      slope[j] = acc_slope;
    }
  }
  b.censoring = std::move(censoring);
  b.y = std::move(y);
}

double residual_integral(const Observation& obs, double u, const NuisanceBundle& b) {
  const std::size_t g = b.censoring->label[obs.row_index];
  const auto& km = b.censoring->strata[g];
  const std::size_t through = km.jumps_through(obs.x);
  double compensator = 0.0;
  if (through > 0) compensator = b.cum_level[g][through - 1] + u * b.cum_slope[g][through - 1];
  const double jump = obs.delta == 0 ? b.rl.evaluate(u, obs.x) : 0.0;
  return jump - compensator;
}

double if_ipw(double u, double y, const NuisanceBundle& b) {
  const double du = u - b.u_mean;
  return du * (y - b.e_mean) / b.u_var - b.cov_u_e * du * du / (b.u_var * b.u_var);
}

// Projection of IF-ipw onto the censoring tangent space: minus the
// augmentation int E dM, which credits a censored subject (Y = 0) with its
// expected residual life.
double if_car(const Observation& obs, double u, const NuisanceBundle& b) {
  return -(u - b.u_mean) / b.u_var * residual_integral(obs, u, b);
}

double if_star(const Observation& obs, double u, double y, const NuisanceBundle& b) {
  return if_ipw(u, y, b) - if_car(obs, u, b);
}

double ksv_slope(std::span<const double> u, std::span<const double> y, double var_floor) {
  const std::size_t n = u.size();
  if (n < 2 || y.size() != n) throw InputError("slope needs at least 2 paired values");
  const double nn = static_cast<double>(n);
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / nn;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nn;
  double var = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (u[i] - mu) * (u[i] - mu);
    cov += (u[i] - mu) * (y[i] - my);
  }
  var /= nn;
  cov /= nn;
  if (!(var >= var_floor)) throw NumericalError("predictor variance below floor");
  return cov / var;
}

OneStepContext::OneStepContext(const SurvivalDataset& data, const Coarsening& coarsening)
    : data_(&data), rows_(iota_rows(data.n())) {
  auto km = std::make_shared<StratifiedCensoringFit>(fit_km_censoring(data, coarsening));
  y_ = std::make_shared<SyntheticResponses>(synthetic_response(data, *km));
  censoring_ = std::move(km);
}

NuisanceBundle OneStepContext::bundle(std::size_t k) const {
  if (k >= data_->p()) throw InputError("predictor index out of range");
  return make_nuisance(*data_, k, censoring_, y_, rows_);
}

std::vector<double> OneStepContext::efficient_if(const NuisanceBundle& b) const {
  const auto& d = *data_;
  auto col = d.column(b.k);
  std::vector<double> out(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) out[i] = if_star(d.observation(i), col[i], y_->y[i], b);
  return out;
}

namespace {

void finish_result(OneStepResult& r, double alpha) {
  const double n = static_cast<double>(r.if_values.size());
  double second = 0.0;
  for (double v : r.if_values) second += v * v;
  r.sigma_hat = std::sqrt(second / n);
  if (!(r.sigma_hat > 0.0)) {
    throw NumericalError("degenerate influence function for predictor " +
                         std::to_string(r.k + 1));
  }
  const double se = r.sigma_hat / std::sqrt(n);
  r.statistic = r.s_onestep / se;
  r.p_value = two_sided_p(r.statistic);
  const double z = z_critical(alpha);
  r.ci_low = r.s_onestep - z * se;
  r.ci_high = r.s_onestep + z * se;
}

}  // namespace

OneStepResult OneStepContext::one_step(std::size_t k, double alpha) const {
  const auto& d = *data_;
  const NuisanceBundle b = bundle(k);
  OneStepResult r;
  r.k = k;
  r.psi_plugin = b.psi_plugin();
  r.if_values = efficient_if(b);

  const double n = static_cast<double>(d.n());
  const double expanded =
      r.psi_plugin + std::accumulate(r.if_values.begin(), r.if_values.end(), 0.0) / n;

  // Simplified form: P_n[(U - Q[U]) Y] / Var + P_n[(U - Q[U]) int E dM] / Var.
  auto col = d.column(k);
  double ipw = 0.0, car = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double du = col[i] - b.u_mean;
    ipw += du * y_->y[i];
    car += du * residual_integral(d.observation(i), col[i], b);
  }
  const double simplified = (ipw / n + car / n) / b.u_var;
  const double scale = std::max({1.0, std::fabs(expanded), std::fabs(simplified)});
  if (std::fabs(expanded - simplified) > kFormTolerance * scale) {
    throw NumericalError("one-step forms disagree for predictor " + std::to_string(k + 1) +
                         ": " + std::to_string(expanded) + " vs " + std::to_string(simplified));
  }
  r.s_onestep = simplified;
  finish_result(r, alpha);
  return r;
}

OneStepResult one_step(const SurvivalDataset& data, std::size_t k, const OneStepConfig& config) {
  if (!config.prefix) return OneStepContext(data, config.coarsening).one_step(k, config.alpha);

  const std::size_t j = *config.prefix;
  if (j < 2 || j > data.n()) throw InputError("prefix size must lie in [2, n]");
  if (k >= data.p()) throw InputError("predictor index out of range");
  OneStepContext ctx(data, config.coarsening);
  std::vector<std::size_t> fit_rows(j);
  std::iota(fit_rows.begin(), fit_rows.end(), 0);
  const NuisanceBundle b = make_nuisance(data, k, ctx.censoring(), ctx.responses(), fit_rows);

  OneStepResult r;
  r.k = k;
  r.psi_plugin = b.psi_plugin();
  r.if_values = ctx.efficient_if(b);
  r.s_onestep = r.psi_plugin + std::accumulate(r.if_values.begin(), r.if_values.end(), 0.0) /
                                   static_cast<double>(data.n());
  finish_result(r, config.alpha);
  return r;
}

OracleResult oracle_test(const SurvivalDataset& data, std::size_t k, double alpha) {
  OracleResult out;
  out.result = one_step(data, k, OneStepConfig{.prefix = std::nullopt, .coarsening = Coarsening::single(), .alpha = alpha});
  out.reject = out.result.p_value < alpha;
  return out;
}

BonferroniResult bonferroni_test(const SurvivalDataset& data, double alpha, int threads) {
  const OneStepContext ctx(data);
  const std::size_t p = data.p();
  BonferroniResult out;
  out.statistics.resize(p);
  out.p_values.resize(p);
  std::vector<std::exception_ptr> errors(p);

#pragma omp parallel for num_threads(std::max(1, threads)) schedule(dynamic, 8)
  for (std::size_t k = 0; k < p; ++k) {
    try {
      const OneStepResult r = ctx.one_step(k, alpha);
      out.statistics[k] = r.statistic;
      out.p_values[k] = r.p_value;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.best = 0;
  for (std::size_t k = 1; k < p; ++k) {
    if (out.p_values[k] < out.p_values[out.best]) out.best = k;
  }
  out.min_p = out.p_values[out.best];
  out.adjusted_p = std::min(1.0, static_cast<double>(p) * out.min_p);
  out.reject = out.min_p < alpha / static_cast<double>(p);
  out.best_result = ctx.one_step(out.best, alpha);
  return out;
}

double conservative_variance(const SurvivalDataset& data, std::size_t k, double bound,
                             int grid_size) {
  if (!(bound > 0.0)) throw InputError("variance bound half-width must be positive");
  if (grid_size < 2) throw InputError("variance bound grid needs at least 2 points");
  const OneStepContext ctx(data);
  const NuisanceBundle b = ctx.bundle(k);
  const std::vector<double> ifs = ctx.efficient_if(b);
  auto col = data.column(k);
  const double n = static_cast<double>(data.n());
  const double var2 = b.u_var * b.u_var;

  double best = 0.0;
  for (int g = 0; g < grid_size; ++g) {
    const double m = -bound + 2.0 * bound * g / (grid_size - 1);
    const double mult = (b.cov_u_e - m) / var2;
    double second = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double du = col[i] - b.u_mean;
      const double v = ifs[i] + mult * (du * du - b.u_var);
      second += v * v;
    }
    best = std::max(best, second / n);
  }
  return best;
}

double default_variance_bound(const SurvivalDataset& data, std::size_t k) {
  const OneStepContext ctx(data);
  const NuisanceBundle b = ctx.bundle(k);
  const double sd_u = std::sqrt(b.u_var);
  const double sd_e = std::fabs(b.rl.slopes[0]) * sd_u;
  if (sd_e > 0.0) return 4.0 * sd_e;
  const auto& y = ctx.responses()->y;
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - my) * (v - my);
  const double fallback = 4.0 * sd_u * std::sqrt(ss / n);
  return fallback > 0.0 ? fallback : 1.0;
}

}  // namespace survscreen
