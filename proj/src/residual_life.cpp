#include "survscreen/residual_life.hpp"

#include <numeric>

#include "survscreen/errors.hpp"

namespace survscreen {

namespace {

// Running co-moments of (U, Y) over the current risk set.
struct CoMoments {
  double count = 0.0;
  double mean_u = 0.0;
  double mean_y = 0.0;
  double m2_u = 0.0;
  double c_uy = 0.0;

  void add(double u, double y) {
    count += 1.0;
    const double du = u - mean_u;
    mean_u += du / count;
    mean_y += (y - mean_y) / count;
    m2_u += du * (u - mean_u);
    c_uy += du * (y - mean_y);
  }
};

}  // namespace

ResidualLifeModel fit_residual_life(std::span<const double> u, std::span<const double> x,
                                    std::span<const double> y, double var_floor) {
  const std::size_t j = u.size();
  if (j < 2 || x.size() != j || y.size() != j) {
    throw InputError("residual-life fit needs at least 2 observations of matching length");
  }
  std::vector<std::size_t> order(j);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });

  ResidualLifeModel model;
  const double total = static_cast<double>(j);
  // Entry for the empty risk set (s beyond the largest time).
  model.intercepts.push_back(0.0);
  model.slopes.push_back(0.0);
  model.centers.push_back(0.0);
  model.var_floor_used.push_back(true);

  CoMoments risk;
  for (std::size_t pos = 0; pos < j;) {
    const double t = x[order[pos]];
    for (; pos < j && x[order[pos]] == t; ++pos) risk.add(u[order[pos]], y[order[pos]]);
    // Pool the risk set with the (j - r) zeros of the indicator-multiplied
    // variables.
    const double r = risk.count;
    const double pool = r * (total - r) / total;
    const double var = (risk.m2_u + pool * risk.mean_u * risk.mean_u) / total;
    const double cov = (risk.c_uy + pool * risk.mean_u * risk.mean_y) / total;
    const bool floored = !(var >= var_floor);
    model.times.push_back(t);
    model.intercepts.push_back(r * risk.mean_y / total);
    model.slopes.push_back(floored ? 0.0 : cov / var);
    model.centers.push_back(r * risk.mean_u / total);
    model.var_floor_used.push_back(floored);
  }
  std::reverse(model.times.begin(), model.times.end());
  std::reverse(model.intercepts.begin(), model.intercepts.end());
  std::reverse(model.slopes.begin(), model.slopes.end());
  std::reverse(model.centers.begin(), model.centers.end());
  std::reverse(model.var_floor_used.begin(), model.var_floor_used.end());
  return model;
}

ResidualLifeModel fit_residual_life(const SurvivalDataset& data, const SyntheticResponses& y,
                                    std::size_t k, std::span<const std::size_t> rows,
                                    double var_floor) {
  std::vector<double> us, xs, ys;
  us.reserve(rows.size());
  xs.reserve(rows.size());
  ys.reserve(rows.size());
  auto col = data.column(k);
  for (std::size_t i : rows) {
    us.push_back(col[i]);
    xs.push_back(data.times()[i]);
    ys.push_back(y.y[i]);
  }
  return fit_residual_life(us, xs, ys, var_floor);
}

}  // namespace survscreen
