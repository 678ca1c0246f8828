#include "survscreen/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "survscreen/errors.hpp"

namespace survscreen {

TauRule TauRule::quantile(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw InputError("tau quantile must lie in (0, 1], got " + std::to_string(q));
  }
  return {Kind::quantile, q};
}

TauRule TauRule::parse(std::string_view text) {
  if (text == "max") return max_observed();
  if (text.starts_with("q:")) {
    std::string_view num = text.substr(2);
    double q = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), q);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
      throw InputError("cannot parse tau rule '" + std::string(text) + "'");
    }
    return quantile(q);
  }
  throw InputError("tau rule must be 'max' or 'q:<x>', got '" + std::string(text) + "'");
}

std::string TauRule::to_string() const {
  if (kind == Kind::max_observed) return "max";
  std::ostringstream os;
  os << "q:" << q;
  return os.str();
}

double lower_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto m = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  m = std::clamp<std::size_t>(m, 1, sorted.size());
  return sorted[m - 1];
}

SurvivalDataset::SurvivalDataset(std::vector<double> time, std::vector<int> status,
                                 std::vector<double> columns, std::size_t p, double tau,
                                 bool standardized, std::vector<std::string> names)
    : time_(std::move(time)),
      status_(std::move(status)),
      columns_(std::move(columns)),
      p_(p),
      tau_(tau),
      standardized_(standardized),
      names_(std::move(names)) {
  const std::size_t n = time_.size();
  if (n < 2) throw InputError("need at least 2 observations, got " + std::to_string(n));
  if (status_.size() != n) throw InputError("time and status lengths differ");
  if (p_ == 0) throw InputError("need at least one predictor");
  if (columns_.size() != n * p_) throw InputError("predictor matrix has wrong size");
  if (!std::isfinite(tau_)) throw InputError("tau must be finite");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(time_[i])) {
      throw InputError("non-finite time at observation " + std::to_string(i + 1));
    }
    if (status_[i] != 0 && status_[i] != 1) {
      throw InputError("status must be 0 or 1 at observation " + std::to_string(i + 1));
    }
    if (time_[i] > tau_) {
      throw InputError("time exceeds tau at observation " + std::to_string(i + 1));
    }
  }
  if (names_.empty()) {
    names_.reserve(p_);
    for (std::size_t k = 0; k < p_; ++k) names_.push_back("u" + std::to_string(k + 1));
  }
  if (names_.size() != p_) throw InputError("predictor name count does not match p");
  for (std::size_t k = 0; k < p_; ++k) {
    auto col = column(k);
    if (!std::all_of(col.begin(), col.end(), [](double v) { return std::isfinite(v); })) {
      throw InputError("non-finite value in predictor column '" + names_[k] + "'");
    }
    auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    if (*lo == *hi) {
      throw InputError("predictor column '" + names_[k] + "' (index " +
                       std::to_string(k + 1) + ") has zero variance");
    }
  }
}

SurvivalDataset SurvivalDataset::from_columns(std::vector<double> time, std::vector<int> status,
                                              const std::vector<std::vector<double>>& columns) {
  const std::size_t n = time.size();
  std::vector<double> flat;
  flat.reserve(n * columns.size());
  for (const auto& c : columns) {
    if (c.size() != n) throw InputError("predictor column length does not match time");
    flat.insert(flat.end(), c.begin(), c.end());
  }
  const double tau = n ? *std::max_element(time.begin(), time.end()) : 0.0;
  return SurvivalDataset(std::move(time), std::move(status), std::move(flat), columns.size(),
                         tau, false);
}

double SurvivalDataset::censoring_fraction() const {
  const auto censored = std::count(status_.begin(), status_.end(), 0);
  return static_cast<double>(censored) / static_cast<double>(n());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row, std::string_view column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last) {
    throw InputError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': cannot parse '" + std::string(field) + "' as a number");
  }
  if (!std::isfinite(v)) {
    throw InputError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': non-finite value");
  }
  return v;
}

}  // namespace

SurvivalTable parse_csv(std::istream& in) {
  SurvivalTable table;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty input: missing header");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "time" || header[1] != "status") {
    throw InputError("header must be 'time,status,u1,...,up'");
  }
  for (std::size_t c = 2; c < header.size(); ++c) table.predictor_names.emplace_back(header[c]);
  const std::size_t p = table.predictor_names.size();

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != p + 2) {
      throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(p + 2) +
                       " fields, got " + std::to_string(fields.size()));
    }
    table.time.push_back(parse_number(fields[0], row, "time"));
    const double status = parse_number(fields[1], row, "status");
    if (status != 0.0 && status != 1.0) {
      throw InputError("row " + std::to_string(row) + ": status must be 0 or 1, got '" +
                       std::string(fields[1]) + "'");
    }
    table.status.push_back(status);
    for (std::size_t k = 0; k < p; ++k) {
      table.predictors.push_back(parse_number(fields[k + 2], row, table.predictor_names[k]));
    }
  }
  return table;
}

SurvivalTable read_csv(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
  if (!file) throw InputError("cannot open '" + path.string() + "'");
  std::string content;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(file.get(), buf, sizeof(buf))) > 0) content.append(buf, got);
  if (got < 0) throw InputError("read error in '" + path.string() + "'");
  std::istringstream in(content);
  return parse_csv(in);
}

SurvivalDataset make_dataset(std::vector<double> time, std::vector<double> status,
                             std::vector<double> columns, std::size_t p, TauRule tau_rule,
                             bool standardize, std::vector<std::string> names) {
  const std::size_t n = time.size();
  if (n < 2) throw InputError("need at least 2 observations, got " + std::to_string(n));
  if (status.size() != n) throw InputError("time and status lengths differ");
  std::vector<int> delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(time[i])) {
      throw InputError("row " + std::to_string(i + 1) + ": non-finite time");
    }
    if (status[i] != 0.0 && status[i] != 1.0) {
      throw InputError("row " + std::to_string(i + 1) + ": status must be 0 or 1");
    }
    delta[i] = static_cast<int>(status[i]);
  }

  const double tau = tau_rule.kind == TauRule::Kind::max_observed
                         ? *std::max_element(time.begin(), time.end())
                         : lower_quantile(time, tau_rule.q);
  for (std::size_t i = 0; i < n; ++i) {
    if (time[i] > tau) {
      time[i] = tau;
      delta[i] = 0;
    }
  }

  if (standardize) {
    for (std::size_t k = 0; k < p; ++k) {
      std::span<double> col(columns.data() + k * n, n);
      auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      if (!std::isfinite(*lo) || !std::isfinite(*hi) || *lo == *hi) continue;  // rejected by the constructor
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      for (double& v : col) v = (v - mean) / sd;
    }
  }
  return SurvivalDataset(std::move(time), std::move(delta), std::move(columns), p, tau,
                         standardize, std::move(names));
}

SurvivalDataset ingest(const SurvivalTable& table, TauRule tau_rule, bool standardize) {
  const std::size_t n = table.time.size();
  const std::size_t p = table.predictor_names.size();
  if (table.predictors.size() != n * p) throw InputError("predictor matrix has wrong size");
  std::vector<double> columns(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) columns[k * n + i] = table.predictors[i * p + k];
  }
  return make_dataset(table.time, table.status, std::move(columns), p, tau_rule, standardize,
                      table.predictor_names);
}

}  // namespace survscreen
