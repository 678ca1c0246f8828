#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "survscreen/dataset.hpp"

namespace survscreen {

inline constexpr double kWeightFloor = 1e-10;

// Product-limit estimate of the censoring survival G(t) = P(C >= t), with
// censorings (delta = 0) playing the role of events.
//
// G is left-continuous: G(t) multiplies the factors of censoring times
// strictly before t, so an event tied with a censoring at t is weighted by
// the value before that censoring. Hazard increments are the Nelson-Aalen
// ratios d_c(s) / Y(s), Y(s) = #{i : x_i >= s}.
struct KaplanMeierFit {
  std::vector<double> jump_times;         // distinct censoring times, ascending
  std::vector<double> survival_after;     // G just after each jump
  std::vector<double> hazard_increments;  // d_c / Y at each jump
  std::size_t n_used = 0;

  double survival(double t) const {
    auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 1.0;
    return survival_after[static_cast<std::size_t>(it - jump_times.begin()) - 1];
  }

  // Number of jump times s <= t.
  std::size_t jumps_through(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin());
  }

  double cumulative_hazard(double t) const {
    double h = 0.0;
    for (std::size_t m = 0, e = jumps_through(t); m < e; ++m) h += hazard_increments[m];
    return h;
  }
};

KaplanMeierFit fit_censoring_km(std::span<const double> time, std::span<const int> status);

// Finite stratification c(U) of one predictor by cut points: label =
// number of cut points <= u. The default is the single stratum.
struct Coarsening {
  std::optional<std::size_t> column;
  std::vector<double> cuts;  // ascending

  static Coarsening single() { return {}; }
  static Coarsening by_cuts(std::size_t column, std::vector<double> cuts);

  std::size_t num_strata() const { return column ? cuts.size() + 1 : 1; }
  std::size_t label(double u) const {
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), u) - cuts.begin());
  }
};

struct StratifiedCensoringFit {
  std::vector<KaplanMeierFit> strata;
  std::vector<std::size_t> label;  // stratum of every row

  const KaplanMeierFit& for_row(std::size_t i) const { return strata[label[i]]; }
};

// One Kaplan-Meier fit per stratum. Every stratum must be nonempty and hold at
// least one subject still at risk at tau.
StratifiedCensoringFit fit_km_censoring(const SurvivalDataset& data,
                                        const Coarsening& strata = Coarsening::single());

struct SyntheticResponses {
  std::vector<double> y;
};

// y_i = delta_i x_i / G(x_i | stratum of i). Throws NumericalError when G at
// an event time falls below the floor.
SyntheticResponses synthetic_response(const SurvivalDataset& data,
                                      const StratifiedCensoringFit& km,
                                      double weight_floor = kWeightFloor);

// Integral of e(s) against the censoring martingale residual of one
// observation:  e(x) 1(delta = 0) - sum_{jumps s <= x} e(s) dLambda(s).
// The caller binds the observation's predictor value into e.
template <class Fn>
double martingale_integral(Fn&& e, const Observation& obs, const KaplanMeierFit& km) {
  double compensator = 0.0;
  for (std::size_t m = 0, end = km.jumps_through(obs.x); m < end; ++m) {
    compensator += e(km.jump_times[m]) * km.hazard_increments[m];
  }
  const double jump = obs.delta == 0 ? e(obs.x) : 0.0;
  return jump - compensator;
}

}  // namespace survscreen
