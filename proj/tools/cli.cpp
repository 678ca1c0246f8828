#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "survscreen/dataset.hpp"
#include "survscreen/errors.hpp"
#include "survscreen/estimators.hpp"
#include "survscreen/simulation.hpp"
#include "survscreen/stabilized.hpp"

namespace survscreen::cli {

namespace {

std::size_t parse_count(const std::string& text, const char* what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InputError(std::string(what) + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::size_t resolve_q(const std::string& text, std::size_t n) {
  return text == "half" ? default_q(n) : parse_count(text, "--qn");
}

std::size_t predictor_index(const SurvivalDataset& data, const std::string& name) {
  const auto& names = data.names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError("--oracle-k: no predictor named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void fill_one_step(Report& r, const OneStepResult& res) {
  r.estimate = res.s_onestep;
  r.ci_low = res.ci_low;
  r.ci_high = res.ci_high;
  r.p_value = res.p_value;
}

}  // namespace

int resolve_threads(const std::string& flag) {
  std::string value = flag;
  if (value.empty()) {
    if (const char* env = std::getenv("SURVSCREEN_THREADS")) value = env;
  }
  if (value.empty() || value == "auto") {
    return std::max(1u, std::thread::hardware_concurrency());
  }
  const std::size_t t = parse_count(value, "threads");
  if (t < 1) throw InputError("threads must be at least 1");
  return static_cast<int>(t);
}

Report screen_dataset(const SurvivalDataset& data, const RunConfig& config, int threads) {
  config.validate();
  Report r;
  r.method = config.method;
  r.n = data.n();
  r.p = data.p();
  r.censoring_fraction = data.censoring_fraction();
  r.tau = data.tau();
  r.q_n = resolve_q(config.q_n, data.n());
  r.config = config;

  if (config.method == "oracle") {
    const std::size_t k = predictor_index(data, *config.oracle_k);
    const auto res = oracle_test(data, k, config.alpha);
    fill_one_step(r, res.result);
    r.adjusted_p_value = res.result.p_value;
    r.reject = res.reject;
    r.selected_index = k;
  } else if (config.method == "bonferroni") {
    const auto res = bonferroni_test(data, config.alpha, threads);
    fill_one_step(r, res.best_result);
    r.p_value = res.min_p;
    r.adjusted_p_value = res.adjusted_p;
    r.reject = res.reject;
    r.selected_index = res.best;
  } else {
    const auto res = multi_ordering_test(data, config.orderings, r.q_n,
                                         parse_variant(config.variant), config.alpha,
                                         config.seed, threads);
    const auto& best = res.best_result();
    const Interval ci = ci_pvalue(best, config.alpha);
    r.estimate = best.s_star;
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    r.p_value = res.min_p;
    r.adjusted_p_value = res.adjusted_p;
    r.reject = res.reject;
    r.selected_index = best.traces.back().k;
    for (std::size_t i = 0; i < res.results.size(); ++i) {
      const auto& s = res.results[i];
      std::set<std::size_t> distinct;
      for (const auto& tr : s.traces) distinct.insert(tr.k);
      r.orderings.push_back({i, s.ordering_seed, s.s_star, s.sigma_bar, s.p_value,
                             data.names()[s.traces.back().k], distinct.size()});
    }
  }
  r.selected_predictor = data.names()[r.selected_index];
  return r;
}

namespace {

struct ScreenArgs {
  std::string csv;
  RunConfig config;
  std::string threads;
  std::string oracle_k;
  bool no_standardize = false;
  bool timing = false;
};

struct SimulateArgs {
  std::string model = "N";
  std::string error = "independent";
  std::string censoring = "light";
  std::size_t n = 500;
  std::size_t p = 100;
  double rho = 0.75;
  std::uint64_t seed = 1;
  std::size_t reps = 100;
  std::vector<std::string> methods{"stabilized_full"};
  std::size_t orderings = 10;
  double alpha = 0.05;
  std::string q_n = "half";
  std::size_t oracle_k = 1;
  std::string tau = "max";
  std::string threads;
};

struct BenchArgs {
  std::size_t n = 500;
  std::vector<std::size_t> p{1000};
  std::string variant = "full";
  std::string q_n = "half";
  std::uint64_t seed = 1;
  std::string threads;
};

int run_screen(const ScreenArgs& a, bool seed_given, std::ostream& out) {
  RunConfig config = a.config;
  config.standardize = !a.no_standardize;
  if (!a.oracle_k.empty()) config.oracle_k = a.oracle_k;
  if (!seed_given) {
    std::random_device rd;
    config.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    config.seed_generated = true;
  }
  config.validate();
  const int threads = resolve_threads(a.threads);

  const auto table = read_csv(a.csv);
  const auto data = ingest(table, TauRule::parse(config.tau), config.standardize);
  const auto start = std::chrono::steady_clock::now();
  Report report = screen_dataset(data, config, threads);
  if (a.timing) {
    report.timing = Timing{
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
        threads};
  }
  out << render(report);
  return 0;
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  ScenarioSpec spec;
  spec.model = parse_model(a.model);
  spec.error = parse_error_law(a.error);
  spec.censoring = parse_censoring(a.censoring);
  spec.n = a.n;
  spec.p = a.p;
  spec.rho = a.rho;
  spec.seed = a.seed;
  spec.tau = TauRule::parse(a.tau);
  spec.validate();
  if (a.oracle_k < 1 || a.oracle_k > a.p) throw InputError("--oracle-k must lie in [1, p]");

  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  const int threads = resolve_threads(a.threads);

  out << report_csv_header() << '\n';
  for (Method m : methods) {
    MonteCarloConfig config;
    config.method = m;
    config.reps = a.reps;
    config.alpha = a.alpha;
    config.orderings = a.orderings;
    config.q_n = resolve_q(a.q_n, a.n);
    config.oracle_k = a.oracle_k - 1;
    config.threads = threads;
    out << report_csv_row(monte_carlo_rejection(spec, config)) << '\n';
  }
  return 0;
}

int run_bench(const BenchArgs& a, std::ostream& out) {
  const Variant variant = parse_variant(a.variant);
  const int threads = resolve_threads(a.threads);
  out << "n,p,variant,threads,q_n,seconds\n";
  for (std::size_t p : a.p) {
    ScenarioSpec spec;
    spec.model = Model::N;
    spec.n = a.n;
    spec.p = p;
    spec.seed = a.seed;
    const Scenario sc = generate_scenario(spec);
    const std::size_t q = resolve_q(a.q_n, a.n);
    const auto order = random_ordering(a.n, a.seed, 0);
    const auto start = std::chrono::steady_clock::now();
    stabilized_estimate(sc.data, q, variant, order, threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << a.n << ',' << p << ',' << to_string(variant) << ',' << threads << ',' << q << ','
        << secs << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Marginal screening of predictors for a right-censored outcome"};
  app.name("survscreen");
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ScreenArgs sa;
  auto* screen = app.add_subcommand("screen", "Test a CSV dataset; JSON report on stdout");
  screen->add_option("csv", sa.csv, "CSV (optionally gzipped): time,status,<predictors...>")
      ->required();
  screen->add_option("--qn", sa.config.q_n, "Initial prefix size: integer or 'half'");
  screen->add_option("--orderings", sa.config.orderings, "Number of random orderings R");
  screen->add_option("--alpha", sa.config.alpha, "Test level");
  screen->add_option("--variant", sa.config.variant, "prefix | full");
  screen->add_option("--tau", sa.config.tau, "End of follow-up: max | q:<x>");
  auto* seed_opt = screen->add_option("--seed", sa.config.seed, "Ordering seed");
  screen->add_option("--threads", sa.threads, "Worker threads or 'auto'");
  screen->add_option("--oracle-k", sa.oracle_k, "Predictor name for the oracle test");
  screen->add_option("--method", sa.config.method, "stabilized | bonferroni | oracle");
  screen->add_flag("--no-standardize", sa.no_standardize, "Keep predictors on their own scale");
  screen->add_flag("--timing", sa.timing, "Add wall time and thread count to the report");

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo rejection rates; CSV on stdout");
  simulate->add_option("--model", ma.model, "N | A1 | A2");
  simulate->add_option("--error", ma.error, "independent | dependent");
  simulate->add_option("--censoring", ma.censoring, "none | light | heavy");
  simulate->add_option("--n", ma.n, "Sample size");
  simulate->add_option("--p", ma.p, "Number of predictors");
  simulate->add_option("--rho", ma.rho, "Predictor correlation");
  simulate->add_option("--seed", ma.seed, "Base seed");
  simulate->add_option("--reps", ma.reps, "Replicates");
  simulate->add_option("--method", ma.methods,
                       "stabilized_prefix | stabilized_full | stabilized_multiR | bonferroni | "
                       "oracle (repeatable)");
  simulate->add_option("--orderings", ma.orderings, "R for stabilized_multiR");
  simulate->add_option("--alpha", ma.alpha, "Test level");
  simulate->add_option("--qn", ma.q_n, "Initial prefix size: integer or 'half'");
  simulate->add_option("--oracle-k", ma.oracle_k, "1-based predictor index for oracle");
  simulate->add_option("--tau", ma.tau, "End of follow-up: max | q:<x>");
  simulate->add_option("--threads", ma.threads, "Worker threads or 'auto'");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time one stabilized screen; CSV on stdout");
  bench->add_option("--n", ba.n, "Sample size");
  bench->add_option("--p", ba.p, "Number of predictors (repeatable)");
  bench->add_option("--variant", ba.variant, "prefix | full");
  bench->add_option("--qn", ba.q_n, "Initial prefix size: integer or 'half'");
  bench->add_option("--seed", ba.seed, "Data and ordering seed");
  bench->add_option("--threads", ba.threads, "Worker threads or 'auto'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*screen) return run_screen(sa, seed_opt->count() > 0, out);
    if (*simulate) return run_simulate(ma, out);
    if (*bench) return run_bench(ba, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace survscreen::cli
