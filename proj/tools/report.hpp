#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace survscreen::cli {

inline constexpr const char* kToolName = "survscreen";
inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
  std::string method = "stabilized";  // stabilized | bonferroni | oracle
  std::string q_n = "half";           // "half" or an integer
  std::size_t orderings = 10;
  double alpha = 0.05;
  std::string variant = "full";       // prefix | full
  std::string tau = "max";            // max | q:<x>
  bool standardize = true;
  std::uint64_t seed = 0;
  bool seed_generated = false;
  std::optional<std::string> oracle_k;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

struct OrderingSummary {
  std::size_t index = 0;
  std::uint64_t stream = 0;
  double estimate = 0.0;
  double sigma_bar = 0.0;
  double p_value = 1.0;
  std::string final_predictor;
  std::size_t distinct_predictors = 0;
  bool operator==(const OrderingSummary&) const = default;
};

struct Timing {
  double seconds = 0.0;
  int threads = 1;
  bool operator==(const Timing&) const = default;
};

struct Report {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string method;
  std::size_t n = 0;
  std::size_t p = 0;
  double censoring_fraction = 0.0;
  double tau = 0.0;
  std::size_t q_n = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  double adjusted_p_value = 1.0;
  bool reject = false;
  std::string selected_predictor;
  std::size_t selected_index = 0;
  std::vector<OrderingSummary> orderings;
  std::optional<Timing> timing;
  RunConfig config;
  bool operator==(const Report&) const = default;
};

void to_json(nlohmann::ordered_json& j, const RunConfig& c);
void from_json(const nlohmann::ordered_json& j, RunConfig& c);
void to_json(nlohmann::ordered_json& j, const OrderingSummary& o);
void from_json(const nlohmann::ordered_json& j, OrderingSummary& o);
void to_json(nlohmann::ordered_json& j, const Timing& t);
void from_json(const nlohmann::ordered_json& j, Timing& t);
void to_json(nlohmann::ordered_json& j, const Report& r);
void from_json(const nlohmann::ordered_json& j, Report& r);

std::string render(const Report& r);

}  // namespace survscreen::cli
