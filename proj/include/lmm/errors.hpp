#pragma once

#include <stdexcept>

namespace lmm {

// Mismatched model constants, bad shapes, invalid call sequences.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN losses and other numeric breakdowns.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lmm
