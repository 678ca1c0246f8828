#include "report.hpp"

#include <charconv>

#include "survscreen/dataset.hpp"
#include "survscreen/errors.hpp"

namespace survscreen::cli {

using nlohmann::ordered_json;

void RunConfig::validate() const {
  if (method != "stabilized" && method != "bonferroni" && method != "oracle") {
    throw InputError("--method must be stabilized, bonferroni or oracle, got '" + method + "'");
  }
  if (method == "oracle" && !oracle_k) throw InputError("--method oracle requires --oracle-k");
  if (orderings < 1) throw InputError("--orderings must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
  if (variant != "prefix" && variant != "full") {
    throw InputError("--variant must be prefix or full, got '" + variant + "'");
  }
  if (q_n != "half") {
    std::size_t v = 0;
    const auto* end = q_n.data() + q_n.size();
    auto [ptr, ec] = std::from_chars(q_n.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw InputError("--qn must be an integer or 'half', got '" + q_n + "'");
    }
  }
  TauRule::parse(tau);
}

void to_json(ordered_json& j, const RunConfig& c) {
  j = ordered_json{{"method", c.method},
                   {"q_n", c.q_n},
                   {"orderings", c.orderings},
                   {"alpha", c.alpha},
                   {"variant", c.variant},
                   {"tau", c.tau},
                   {"standardize", c.standardize},
                   {"seed", c.seed},
                   {"seed_generated", c.seed_generated},
                   {"oracle_k", c.oracle_k ? ordered_json(*c.oracle_k) : ordered_json(nullptr)}};
}

void from_json(const ordered_json& j, RunConfig& c) {
  j.at("method").get_to(c.method);
  j.at("q_n").get_to(c.q_n);
  j.at("orderings").get_to(c.orderings);
  j.at("alpha").get_to(c.alpha);
  j.at("variant").get_to(c.variant);
  j.at("tau").get_to(c.tau);
  j.at("standardize").get_to(c.standardize);
  j.at("seed").get_to(c.seed);
  j.at("seed_generated").get_to(c.seed_generated);
  if (j.at("oracle_k").is_null()) {
    c.oracle_k.reset();
  } else {
    c.oracle_k = j.at("oracle_k").get<std::string>();
  }
}

void to_json(ordered_json& j, const OrderingSummary& o) {
  j = ordered_json{{"index", o.index},
                   {"stream", o.stream},
                   {"estimate", o.estimate},
                   {"sigma_bar", o.sigma_bar},
                   {"p_value", o.p_value},
                   {"final_predictor", o.final_predictor},
                   {"distinct_predictors", o.distinct_predictors}};
}

void from_json(const ordered_json& j, OrderingSummary& o) {
  j.at("index").get_to(o.index);
  j.at("stream").get_to(o.stream);
  j.at("estimate").get_to(o.estimate);
  j.at("sigma_bar").get_to(o.sigma_bar);
  j.at("p_value").get_to(o.p_value);
  j.at("final_predictor").get_to(o.final_predictor);
  j.at("distinct_predictors").get_to(o.distinct_predictors);
}

void to_json(ordered_json& j, const Timing& t) {
  j = ordered_json{{"seconds", t.seconds}, {"threads", t.threads}};
}

void from_json(const ordered_json& j, Timing& t) {
  j.at("seconds").get_to(t.seconds);
  j.at("threads").get_to(t.threads);
}

void to_json(ordered_json& j, const Report& r) {
  j = ordered_json{
      {"tool", r.tool},
      {"version", r.version},
      {"method", r.method},
      {"n", r.n},
      {"p", r.p},
      {"censoring_fraction", r.censoring_fraction},
      {"tau", r.tau},
      {"q_n", r.q_n},
      {"estimate", r.estimate},
      {"ci", {{"low", r.ci_low}, {"high", r.ci_high}, {"level", 1.0 - r.config.alpha}}},
      {"p_value", {{"raw", r.p_value}, {"adjusted", r.adjusted_p_value}}},
      {"reject", r.reject},
      {"selected", {{"name", r.selected_predictor}, {"index", r.selected_index}}},
      {"orderings", r.orderings},
  };
  if (r.timing) j["timing"] = *r.timing;
  j["config"] = r.config;
}

void from_json(const ordered_json& j, Report& r) {
  j.at("tool").get_to(r.tool);
  j.at("version").get_to(r.version);
  j.at("method").get_to(r.method);
  j.at("n").get_to(r.n);
  j.at("p").get_to(r.p);
  j.at("censoring_fraction").get_to(r.censoring_fraction);
  j.at("tau").get_to(r.tau);
  j.at("q_n").get_to(r.q_n);
  j.at("estimate").get_to(r.estimate);
  j.at("ci").at("low").get_to(r.ci_low);
  j.at("ci").at("high").get_to(r.ci_high);
  j.at("p_value").at("raw").get_to(r.p_value);
  j.at("p_value").at("adjusted").get_to(r.adjusted_p_value);
  j.at("reject").get_to(r.reject);
  j.at("selected").at("name").get_to(r.selected_predictor);
  j.at("selected").at("index").get_to(r.selected_index);
  j.at("orderings").get_to(r.orderings);
  if (j.contains("timing")) {
    r.timing = j.at("timing").get<Timing>();
  } else {
    r.timing.reset();
  }
  j.at("config").get_to(r.config);
}

std::string render(const Report& r) { return ordered_json(r).dump(2) + "\n"; }

}  // namespace survscreen::cli
