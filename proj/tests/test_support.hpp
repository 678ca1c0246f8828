#pragma once

#include <numeric>
#include <vector>

#include "naive_oracle.hpp"
#include "survscreen/dataset.hpp"

namespace testing_support {

inline survscreen::SurvivalDataset to_dataset(const naive::Data& D) {
  return survscreen::SurvivalDataset::from_columns(D.x, D.d, D.u);
}

inline std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace testing_support
