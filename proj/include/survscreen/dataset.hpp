#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace survscreen {

struct Observation {
  double x = 0.0;  // follow-up time, capped at tau
  int delta = 0;   // 1 = event observed, 0 = censored
  std::size_t row_index = 0;
};

// How the end of follow-up is chosen from the observed times.
struct TauRule {
  enum class Kind { max_observed, quantile };
  Kind kind = Kind::max_observed;
  double q = 1.0;

  static TauRule max_observed() { return {}; }
  static TauRule quantile(double q);
  // "max" or "q:<x>"
  static TauRule parse(std::string_view text);
  std::string to_string() const;
};

// Lower (type-1) empirical quantile: the smallest order statistic x_(m) with
// m / n >= q.
double lower_quantile(std::span<const double> values, double q);

// Immutable right-censored sample with a dense n x p predictor matrix stored
// column by column.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<double> time, std::vector<int> status,
                  std::vector<double> columns, std::size_t p, double tau,
                  bool standardized, std::vector<std::string> names = {});

  // Convenience constructor: tau = max observed time, no standardization.
  static SurvivalDataset from_columns(std::vector<double> time,
                                      std::vector<int> status,
                                      const std::vector<std::vector<double>>& columns);

  std::size_t n() const { return time_.size(); }
  std::size_t p() const { return p_; }
  double tau() const { return tau_; }
  bool standardized() const { return standardized_; }

  std::span<const double> times() const { return time_; }
  std::span<const int> statuses() const { return status_; }
  std::span<const double> column(std::size_t k) const {
    return {columns_.data() + k * n(), n()};
  }
  double u(std::size_t i, std::size_t k) const { return columns_[k * n() + i]; }
  Observation observation(std::size_t i) const { return {time_[i], status_[i], i}; }

  const std::vector<std::string>& names() const { return names_; }
  double censoring_fraction() const;

 private:
  std::vector<double> time_;
  std::vector<int> status_;
  std::vector<double> columns_;
  std::size_t p_;
  double tau_;
  bool standardized_;
  std::vector<std::string> names_;
};

// Rows as read from a file: predictor values are row-major, status is kept
// as parsed so that ingestion can report bad codes with their row number.
struct SurvivalTable {
  std::vector<std::string> predictor_names;
  std::vector<double> time;
  std::vector<double> status;
  std::vector<double> predictors;  // row-major n x p
};

// CSV with header `time,status,<name1>,...,<namep>`. Plain or gzip input.
SurvivalTable read_csv(const std::filesystem::path& path);
SurvivalTable parse_csv(std::istream& in);

// Validates, applies administrative censoring at tau (x > tau becomes
// (tau, censored)), optionally standardizes columns to mean 0 / variance 1
// (divisor n) and lays the predictors out column-major.
SurvivalDataset ingest(const SurvivalTable& table, TauRule tau_rule, bool standardize);

// Same as ingest() for data that is already column-major.
SurvivalDataset make_dataset(std::vector<double> time, std::vector<double> status,
                             std::vector<double> columns, std::size_t p,
                             TauRule tau_rule, bool standardize,
                             std::vector<std::string> names = {});

}  // namespace survscreen
