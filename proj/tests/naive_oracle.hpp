#pragma once

// Straight-from-the-formulas reference implementation used only by tests.
// Every quantity is recomputed with plain loops over the raw arrays; nothing
// is cached, sorted or shared with the library.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

namespace naive {

struct Data {
  std::vector<double> x;
  std::vector<int> d;
  std::vector<std::vector<double>> u;  // u[k][i]
  std::size_t n() const { return x.size(); }
  std::size_t p() const { return u.size(); }
};

// Censoring survival G(t) = prod over censoring times s < t of (1 - dc(s)/Y(s)),
// over the subjects listed in `rows`.
inline double km(const Data& D, const std::vector<std::size_t>& rows, double t) {
  double g = 1.0;
  std::vector<double> done;
  for (std::size_t a : rows) {
    const double s = D.x[a];
    if (D.d[a] != 0 || !(s < t)) continue;
    bool seen = false;
    for (double v : done) seen = seen || v == s;
    if (seen) continue;
    done.push_back(s);
    double dc = 0.0, at_risk = 0.0;
    for (std::size_t b : rows) {
      if (D.x[b] >= s) at_risk += 1.0;
      if (D.x[b] == s && D.d[b] == 0) dc += 1.0;
    }
    g *= 1.0 - dc / at_risk;
  }
  return g;
}

struct Jump {
  double s;
  double dlambda;
};

inline std::vector<Jump> hazard_jumps(const Data& D, const std::vector<std::size_t>& rows) {
  std::vector<Jump> out;
  for (std::size_t a : rows) {
    if (D.d[a] != 0) continue;
    const double s = D.x[a];
    bool seen = false;
    for (const auto& j : out) seen = seen || j.s == s;
    if (seen) continue;
    double dc = 0.0, at_risk = 0.0;
    for (std::size_t b : rows) {
      if (D.x[b] >= s) at_risk += 1.0;
      if (D.x[b] == s && D.d[b] == 0) dc += 1.0;
    }
    out.push_back({s, dc / at_risk});
  }
  return out;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

// Synthetic responses for every row, G fit on `rows`.
inline std::vector<double> synthetic(const Data& D, const std::vector<std::size_t>& rows) {
  std::vector<double> y(D.n(), 0.0);
  for (std::size_t i = 0; i < D.n(); ++i) {
    if (D.d[i] == 1) y[i] = D.x[i] / km(D, rows, D.x[i]);
  }
  return y;
}

// Residual-life regression evaluated directly from its defining moments over
// `rows`; s = -inf gives the plain OLS line.
inline double residual_life(const Data& D, const std::vector<double>& y, std::size_t k,
                            const std::vector<std::size_t>& rows, double u, double s,
                            double floor = 1e-8) {
  const double m = static_cast<double>(rows.size());
  double mu = 0.0, my = 0.0;
  for (std::size_t i : rows) {
    const double ind = D.x[i] >= s ? 1.0 : 0.0;
    mu += D.u[k][i] * ind;
    my += y[i] * ind;
  }
  mu /= m;
  my /= m;
  double var = 0.0, cov = 0.0;
  for (std::size_t i : rows) {
    const double ind = D.x[i] >= s ? 1.0 : 0.0;
    var += (D.u[k][i] * ind - mu) * (D.u[k][i] * ind - mu);
    cov += (D.u[k][i] * ind - mu) * (y[i] * ind - my);
  }
  var /= m;
  cov /= m;
  const double b = var < floor ? 0.0 : cov / var;
  return my + b * (u - mu);
}

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

struct Nuisance {
  std::size_t k = 0;
  std::vector<std::size_t> fit;  // rows for Q and E
  std::vector<double> y;         // synthetic responses (censoring fit on all rows)
  std::vector<Jump> jumps;       // full-sample censoring hazard
  double ubar = 0.0, var = 0.0, mean_e = 0.0, cov_ue = 0.0;
};

inline Nuisance nuisance(const Data& D, std::size_t k, const std::vector<std::size_t>& fit) {
  Nuisance N;
  N.k = k;
  N.fit = fit;
  const auto all = all_rows(D.n());
  N.y = synthetic(D, all);
  N.jumps = hazard_jumps(D, all);
  const double m = static_cast<double>(fit.size());
  for (std::size_t i : fit) N.ubar += D.u[k][i] / m;
  for (std::size_t i : fit) N.var += (D.u[k][i] - N.ubar) * (D.u[k][i] - N.ubar) / m;
  for (std::size_t i : fit) N.mean_e += residual_life(D, N.y, k, fit, D.u[k][i], kMinusInf) / m;
  for (std::size_t i : fit) {
    N.cov_ue += (D.u[k][i] - N.ubar) *
                (residual_life(D, N.y, k, fit, D.u[k][i], kMinusInf) - N.mean_e) / m;
  }
  return N;
}

inline double psi(const Nuisance& N) { return N.cov_ue / N.var; }

// e(u, X) 1(delta = 0) - sum over censoring times s <= X of e(u, s) dLambda(s).
inline double martingale(const Data& D, const Nuisance& N, std::size_t i) {
  const double u = D.u[N.k][i];
  double v = D.d[i] == 0 ? residual_life(D, N.y, N.k, N.fit, u, D.x[i]) : 0.0;
  for (const auto& j : N.jumps) {
    if (j.s <= D.x[i]) v -= residual_life(D, N.y, N.k, N.fit, u, j.s) * j.dlambda;
  }
  return v;
}

inline double if_ipw(const Data& D, const Nuisance& N, std::size_t i) {
  const double c = D.u[N.k][i] - N.ubar;
  return c * (N.y[i] - N.mean_e) / N.var - N.cov_ue * c * c / (N.var * N.var);
}

inline double if_car(const Data& D, const Nuisance& N, std::size_t i) {
  return -(D.u[N.k][i] - N.ubar) / N.var * martingale(D, N, i);
}

inline double if_star(const Data& D, const Nuisance& N, std::size_t i) {
  return if_ipw(D, N, i) - if_car(D, N, i);
}

// One-step estimate with everything fit on the full sample, as
// P_n[(U - Q U) Y] / Var + P_n[(U - Q U) int E dM] / Var.
inline double one_step_simplified(const Data& D, std::size_t k) {
  const auto N = nuisance(D, k, all_rows(D.n()));
  const double n = static_cast<double>(D.n());
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < D.n(); ++i) {
    a += (D.u[k][i] - N.ubar) * N.y[i] / n;
    b += (D.u[k][i] - N.ubar) * martingale(D, N, i) / n;
  }
  return a / N.var + b / N.var;
}

inline double one_step_expanded(const Data& D, std::size_t k) {
  const auto N = nuisance(D, k, all_rows(D.n()));
  double s = 0.0;
  for (std::size_t i = 0; i < D.n(); ++i) s += if_star(D, N, i);
  return psi(N) + s / static_cast<double>(D.n());
}

inline double ols_slope(const std::vector<double>& u, const std::vector<double>& y) {
  const double n = static_cast<double>(u.size());
  double mu = 0.0, my = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i] / n;
    my += y[i] / n;
  }
  double c = 0.0, v = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    c += (u[i] - mu) * (y[i] - my);
    v += (u[i] - mu) * (u[i] - mu);
  }
  return c / v;
}

struct Pick {
  std::size_t k = 0;
  int m = 1;
};

// Predictor with the largest |slope| of the prefix IPCW responses.
inline Pick select(const Data& D, const std::vector<std::size_t>& prefix) {
  std::vector<double> y;
  for (std::size_t i : prefix) y.push_back(D.d[i] == 1 ? D.x[i] / km(D, prefix, D.x[i]) : 0.0);
  Pick best;
  double best_abs = -1.0, best_slope = 0.0;
  for (std::size_t k = 0; k < D.p(); ++k) {
    std::vector<double> u;
    for (std::size_t i : prefix) u.push_back(D.u[k][i]);
    const double m = static_cast<double>(u.size());
    double mu = 0.0;
    for (double v : u) mu += v / m;
    double var = 0.0;
    for (double v : u) var += (v - mu) * (v - mu) / m;
    double slope = 0.0;
    if (var >= 1e-8) slope = ols_slope(u, y);
    if (std::fabs(slope) > best_abs) {
      best_abs = std::fabs(slope);
      best_slope = slope;
      best.k = k;
    }
  }
  best.m = best_slope < 0.0 ? -1 : 1;
  return best;
}

struct Step {
  std::size_t k = 0;
  int m = 1;
  double sigma = 0.0;
  double one_step = 0.0;
  double increment = 0.0;
};

struct Stabilized {
  std::vector<Step> steps;
  double sigma_bar = 0.0;
  double s_star = 0.0;
};

inline Stabilized stabilized(const Data& D, std::size_t q, bool full_sample,
                             const std::vector<std::size_t>& order) {
  Stabilized out;
  const std::size_t n = D.n();
  for (std::size_t j = q; j < n; ++j) {
    std::vector<std::size_t> prefix(order.begin(), order.begin() + static_cast<long>(j));
    const Pick pk = select(D, prefix);
    const auto N = nuisance(D, pk.k, full_sample ? all_rows(n) : prefix);
    std::vector<double> vals;
    for (std::size_t i : prefix) vals.push_back(if_star(D, N, i));
    double mean = 0.0;
    for (double v : vals) mean += v / static_cast<double>(j);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean) / static_cast<double>(j);
    Step st;
    st.k = pk.k;
    st.m = pk.m;
    st.sigma = std::sqrt(ss);
    st.one_step = psi(N) + if_star(D, N, order[j]);
    out.steps.push_back(st);
  }
  double inv = 0.0;
  for (const auto& st : out.steps) inv += 1.0 / st.sigma;
  out.sigma_bar = static_cast<double>(out.steps.size()) / inv;
  double total = 0.0;
  for (auto& st : out.steps) {
    st.increment = out.sigma_bar / st.sigma * st.m * st.one_step;
    total += st.increment;
  }
  out.s_star = total / static_cast<double>(out.steps.size());
  return out;
}

// Random instance: standard normal predictors, outcome linked to the first
// predictor, roughly `censor_rate` censoring; with `ties` the times are
// rounded so that equal times (events and censorings) occur.
inline Data random_instance(std::mt19937_64& rng, std::size_t n, std::size_t p,
                            double censor_rate, bool ties) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Data D;
  D.u.assign(p, std::vector<double>(n));
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < n; ++i) D.u[k][i] = z(rng);
  }
  D.x.resize(n);
  D.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.5 * D.u[0][i] + z(rng);
    if (ties) t = std::round(t * 4.0) / 4.0;
    D.x[i] = t;
    D.d[i] = unif(rng) < censor_rate ? 0 : 1;
  }
  // The largest time stays an event so that G is positive at every event.
  std::size_t imax = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (D.x[i] > D.x[imax]) imax = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (D.x[i] == D.x[imax]) D.d[i] = 1;
  }
  return D;
}

}  // namespace naive
