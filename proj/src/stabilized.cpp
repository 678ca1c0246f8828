#include "survscreen/stabilized.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>

#include "survscreen/errors.hpp"
#include "survscreen/estimators.hpp"
#include "survscreen/kaplan_meier.hpp"
#include "survscreen/normal.hpp"
#include "survscreen/rng.hpp"

namespace survscreen {

std::string to_string(Variant v) { return v == Variant::prefix ? "prefix" : "full"; }

Variant parse_variant(const std::string& text) {
  if (text == "prefix") return Variant::prefix;
  if (text == "full" || text == "full_sample") return Variant::full_sample;
  throw InputError("variant must be 'prefix' or 'full', got '" + text + "'");
}

namespace {

void check_ordering(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) throw InputError("ordering length does not match n");
  std::vector<bool> seen(n, false);
  for (std::size_t r : order) {
    if (r >= n || seen[r]) throw InputError("ordering is not a permutation of the rows");
    seen[r] = true;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

SelectionKernel::SelectionKernel(const SurvivalDataset& data, std::span<const std::size_t> order,
                                 int threads)
    : data_(data),
      order_(order.begin(), order.end()),
      position_(data.n()),
      time_sorted_(data.n()),
      threads_(std::max(1, threads)),
      sum_u_(data.p(), 0.0),
      sum_uu_(data.p(), 0.0),
      weights_(data.n(), 0.0),
      slopes_(data.p(), 0.0) {
  check_ordering(order_, data.n());
  for (std::size_t t = 0; t < order_.size(); ++t) position_[order_[t]] = t;
  std::iota(time_sorted_.begin(), time_sorted_.end(), 0);
  auto times = data.times();
  auto status = data.statuses();
  std::stable_sort(time_sorted_.begin(), time_sorted_.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return status[a] > status[b];
  });
}

void SelectionKernel::reset() {
  std::fill(sum_u_.begin(), sum_u_.end(), 0.0);
  std::fill(sum_uu_.begin(), sum_uu_.end(), 0.0);
  included_ = 0;
}

Selection SelectionKernel::select(std::size_t j) {
  const std::size_t n = data_.n();
  const std::size_t p = data_.p();
  if (j < 2 || j > n) throw InputError("prefix size must lie in [2, n]");
  if (j < included_) reset();
  for (; included_ < j; ++included_) {
    const std::size_t row = order_[included_];
    for (std::size_t k = 0; k < p; ++k) {
      const double v = data_.u(row, k);
      sum_u_[k] += v;
      sum_uu_[k] += v * v;
    }
  }

  // Censoring Kaplan-Meier on the prefix, evaluated at the prefix event times.
  auto times = data_.times();
  auto status = data_.statuses();
  std::fill(weights_.begin(), weights_.end(), 0.0);
  double surv = 1.0;
  double at_risk = static_cast<double>(j);
  double y_sum = 0.0;
  for (std::size_t pos = 0; pos < n;) {
    const double t = times[time_sorted_[pos]];
    double tied = 0.0, censored = 0.0;
    for (; pos < n && times[time_sorted_[pos]] == t; ++pos) {
      const std::size_t row = time_sorted_[pos];
      if (position_[row] >= j) continue;
      tied += 1.0;
      if (status[row] == 0) {
        censored += 1.0;
      } else {
        if (!(surv >= kWeightFloor)) {
          throw NumericalError("prefix censoring survival below floor at time " +
                               std::to_string(t));
        }
        weights_[row] = t / surv;
        y_sum += weights_[row];
      }
    }
    if (censored > 0.0) surv *= 1.0 - censored / at_risk;
    at_risk -= tied;
  }
  const double jj = static_cast<double>(j);
  const double y_mean = y_sum / jj;
  for (std::size_t t = 0; t < j; ++t) {
    double& w = weights_[order_[t]];
    w = (w - y_mean) / jj;
  }

  const double* w = weights_.data();
  const auto np = static_cast<std::ptrdiff_t>(p);
#pragma omp parallel for num_threads(threads_) schedule(static)
  for (std::ptrdiff_t k = 0; k < np; ++k) {
    const double mean = sum_u_[k] / jj;
    const double var = sum_uu_[k] / jj - mean * mean;
    const double cov = dot(data_.column(static_cast<std::size_t>(k)).data(), w, n);
    slopes_[k] = var >= kVarianceFloor ? cov / var : 0.0;
  }

  Selection best{0, 1, slopes_[0]};
  double best_abs = std::fabs(slopes_[0]);
  for (std::size_t k = 1; k < p; ++k) {
    const double a = std::fabs(slopes_[k]);
    if (a > best_abs) {
      best_abs = a;
      best = {k, 1, slopes_[k]};
    }
  }
  best.sign = best.slope < 0.0 ? -1 : 1;
  return best;
}

Selection select_predictor(const SurvivalDataset& data, std::span<const std::size_t> order,
                           std::size_t j, int threads) {
  SelectionKernel kernel(data, order, threads);
  return kernel.select(j);
}

namespace {

double centered_sd(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

struct FullSampleIf {
  double psi = 0.0;
  std::vector<double> values;  // by original row
};

}  // namespace

StabilizedResult stabilized_estimate(const SurvivalDataset& data, std::size_t q_n,
                                     Variant variant, std::span<const std::size_t> order,
                                     int threads) {
  const std::size_t n = data.n();
  if (q_n < 2 || q_n > n - 1) {
    throw InputError("q_n must lie in [2, n-1], got " + std::to_string(q_n));
  }
  check_ordering(order, n);

  const OneStepContext ctx(data);
  const auto& y = ctx.responses()->y;
  SelectionKernel kernel(data, order, threads);
  std::map<std::size_t, FullSampleIf> full_cache;

  StabilizedResult result;
  result.n = n;
  result.q_n = q_n;
  result.variant = variant;
  result.traces.reserve(n - q_n);

  std::vector<double> prefix_if;
  for (std::size_t j = q_n; j < n; ++j) {
    const Selection sel = kernel.select(j);
    const std::size_t next = order[j];
    PrefixTrace tr;
    tr.j = j;
    tr.k = sel.k;
    tr.m = sel.sign;
    prefix_if.resize(j);
    auto col = data.column(sel.k);

    if (variant == Variant::full_sample) {
      auto it = full_cache.find(sel.k);
      if (it == full_cache.end()) {
        const NuisanceBundle b = ctx.bundle(sel.k);
        it = full_cache.emplace(sel.k, FullSampleIf{b.psi_plugin(), ctx.efficient_if(b)}).first;
      }
      const FullSampleIf& f = it->second;
      for (std::size_t t = 0; t < j; ++t) prefix_if[t] = f.values[order[t]];
      tr.one_step = f.psi + f.values[next];
    } else {
      const NuisanceBundle b = make_nuisance(data, sel.k, ctx.censoring(), ctx.responses(),
                                             order.subspan(0, j));
      for (std::size_t t = 0; t < j; ++t) {
        const std::size_t row = order[t];
        prefix_if[t] = if_star(data.observation(row), col[row], y[row], b);
      }
      tr.one_step = b.psi_plugin() + if_star(data.observation(next), col[next], y[next], b);
    }

    tr.sigma = centered_sd(prefix_if);
    if (!(tr.sigma >= kSigmaFloor)) {
      throw NumericalError("influence function degenerate on prefix " + std::to_string(j) +
                           " (sd " + std::to_string(tr.sigma) + ")");
    }
    result.traces.push_back(tr);
  }

  const double count = static_cast<double>(n - q_n);
  double inv_sum = 0.0;
  for (const auto& tr : result.traces) inv_sum += 1.0 / tr.sigma;
  result.sigma_bar = count / inv_sum;
  double total = 0.0;
  for (auto& tr : result.traces) {
    tr.weight = result.sigma_bar / tr.sigma;
    tr.increment = tr.weight * tr.m * tr.one_step;
    total += tr.increment;
  }
  result.s_star = total / count;
  const Interval ci = ci_pvalue(result, 0.05);
  result.ci_low = ci.low;
  result.ci_high = ci.high;
  result.p_value = ci.p_value;
  return result;
}

Interval ci_pvalue(double s_star, double sigma_bar, std::size_t effective_n, double alpha) {
  const double se = sigma_bar / std::sqrt(static_cast<double>(effective_n));
  const double z = z_critical(alpha);
  return {s_star - z * se, s_star + z * se, two_sided_p(s_star / se)};
}

Interval ci_pvalue(const StabilizedResult& result, double alpha) {
  return ci_pvalue(result.s_star, result.sigma_bar, result.n - result.q_n, alpha);
}

std::vector<std::size_t> random_ordering(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(stream_key(seed, 0x6f7264657273ULL, index));
  return random_permutation(n, rng);
}

MultiOrderingResult multi_ordering_test(const SurvivalDataset& data, std::size_t orderings,
                                        std::size_t q_n, Variant variant, double alpha,
                                        std::uint64_t seed, int threads) {
  if (orderings < 1) throw InputError("need at least one ordering");
  MultiOrderingResult out;
  out.results.resize(orderings);
  std::vector<std::exception_ptr> errors(orderings);
  const int outer = std::max(1, std::min<int>(threads, static_cast<int>(orderings)));
  const int inner = orderings == 1 ? std::max(1, threads) : 1;
  const auto count = static_cast<std::ptrdiff_t>(orderings);

#pragma omp parallel for num_threads(outer) schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    try {
      const auto order = random_ordering(data.n(), seed, static_cast<std::uint64_t>(r));
      out.results[r] = stabilized_estimate(data, q_n, variant, order, inner);
      out.results[r].ordering_seed = stream_key(seed, 0x6f7264657273ULL, r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.p_values.reserve(orderings);
  for (const auto& r : out.results) out.p_values.push_back(r.p_value);
  for (std::size_t r = 1; r < orderings; ++r) {
    if (out.p_values[r] < out.p_values[out.best]) out.best = r;
  }
  out.min_p = out.p_values[out.best];
  const double R = static_cast<double>(orderings);
  out.adjusted_p = std::min(1.0, R * out.min_p);
  out.reject = out.min_p < alpha / R;
  return out;
}

}  // namespace survscreen
