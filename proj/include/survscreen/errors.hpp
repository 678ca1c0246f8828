#pragma once

#include <stdexcept>
#include <string>

namespace survscreen {

// Malformed or unusable input (bad status codes, NaN, constant columns, bad
// flags). The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical degeneracy detected while estimating: censoring weights below
// the floor, a vanishing predictor variance, or a degenerate influence
// function. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace survscreen
