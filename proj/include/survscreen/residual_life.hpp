#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "survscreen/dataset.hpp"
#include "survscreen/kaplan_meier.hpp"

namespace survscreen {

inline constexpr double kVarianceFloor = 1e-8;

// Linear estimate of the conditional residual life E[Y | U = u, X >= s]:
//
//   E(u, s) = P[Y 1(X >= s)] + Cov(U 1(X >= s), Y 1(X >= s)) / Var(U 1(X >= s))
//                               * (u - P[U 1(X >= s)])
//
// with all moments over the whole fitting sample (zeros included, divisor =
// sample size). The risk set {X >= s} only changes at observed times, so the
// coefficients are stored once per distinct time t_m and cover
// s in (t_{m-1}, t_m]. Past the last time the risk set is empty and E = 0.
// When Var(U 1(X >= s)) < var_floor the slope is set to 0.
struct ResidualLifeModel {
  std::vector<double> times;       // distinct observed times, ascending
  std::vector<double> intercepts;  // a(s); one extra trailing entry for s > max time
  std::vector<double> slopes;      // b(s)
  std::vector<double> centers;     // P[U 1(X >= s)]
  std::vector<bool> var_floor_used;

  std::size_t entry(double s) const {
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), s) -
                                    times.begin());
  }
  double evaluate(double u, double s) const { return evaluate_entry(u, entry(s)); }
  // s = -infinity: the ordinary least-squares line of Y on U.
  double evaluate(double u) const { return evaluate_entry(u, 0); }
  double evaluate_entry(double u, std::size_t m) const {
    return intercepts[m] + slopes[m] * (u - centers[m]);
  }
};

// Fits on the given arrays (all of equal length >= 2).
ResidualLifeModel fit_residual_life(std::span<const double> u, std::span<const double> x,
                                    std::span<const double> y,
                                    double var_floor = kVarianceFloor);

// Fits predictor k on the rows listed in `rows` (a prefix of an ordering, or
// all rows).
ResidualLifeModel fit_residual_life(const SurvivalDataset& data, const SyntheticResponses& y,
                                    std::size_t k, std::span<const std::size_t> rows,
                                    double var_floor = kVarianceFloor);

}  // namespace survscreen
