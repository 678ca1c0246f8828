#include "survscreen/kaplan_meier.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "survscreen/errors.hpp"

namespace survscreen {

KaplanMeierFit fit_censoring_km(std::span<const double> time, std::span<const int> status) {
  const std::size_t n = time.size();
  KaplanMeierFit fit;
  fit.n_used = n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  double surv = 1.0;
  std::size_t at_risk = n;
  for (std::size_t pos = 0; pos < n;) {
    const double t = time[order[pos]];
    std::size_t tied = 0, censored = 0;
    for (; pos < n && time[order[pos]] == t; ++pos, ++tied) {
      if (status[order[pos]] == 0) ++censored;
    }
    if (censored > 0) {
      const double ratio = static_cast<double>(censored) / static_cast<double>(at_risk);
      surv *= 1.0 - ratio;
      fit.jump_times.push_back(t);
      fit.survival_after.push_back(surv);
      fit.hazard_increments.push_back(ratio);
    }
    at_risk -= tied;
  }
  return fit;
}

Coarsening Coarsening::by_cuts(std::size_t column, std::vector<double> cuts) {
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return {column, std::move(cuts)};
}

StratifiedCensoringFit fit_km_censoring(const SurvivalDataset& data, const Coarsening& strata) {
  const std::size_t n = data.n();
  const std::size_t groups = strata.num_strata();
  if (strata.column && *strata.column >= data.p()) {
    throw InputError("coarsening column out of range");
  }
  StratifiedCensoringFit out;
  out.label.resize(n, 0);
  if (strata.column) {
    auto col = data.column(*strata.column);
    for (std::size_t i = 0; i < n; ++i) out.label[i] = strata.label(col[i]);
  }

  out.strata.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<double> t;
    std::vector<int> d;
    bool at_risk_at_tau = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.label[i] != g) continue;
      t.push_back(data.times()[i]);
      d.push_back(data.statuses()[i]);
      at_risk_at_tau = at_risk_at_tau || data.times()[i] >= data.tau();
    }
    if (t.empty()) throw InputError("censoring stratum " + std::to_string(g) + " is empty");
    if (!at_risk_at_tau) {
      throw InputError("censoring stratum " + std::to_string(g) +
                       " has nobody at risk at the end of follow-up");
    }
    out.strata.push_back(fit_censoring_km(t, d));
  }
  return out;
}

SyntheticResponses synthetic_response(const SurvivalDataset& data,
                                      const StratifiedCensoringFit& km, double weight_floor) {
  SyntheticResponses out;
  out.y.assign(data.n(), 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.statuses()[i] == 0) continue;
    const double x = data.times()[i];
    const double g = km.for_row(i).survival(x);
    if (!(g >= weight_floor)) {
      throw NumericalError("censoring survival " + std::to_string(g) + " below floor at event " +
                           std::to_string(i + 1) + " (time " + std::to_string(x) +
                           "); choose a smaller tau");
    }
    out.y[i] = x / g;
  }
  return out;
}

}  // namespace survscreen
