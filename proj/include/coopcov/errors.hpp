// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace coopcov {

enum class errc {
  invalid_argument,
  insufficient_atoms,
  invalid_pair,
  invalid_geometry,
  invalid_ratio,
  cell_sampling_exhausted,
  pole,
  branch_point,
  domain,
  integration,
  wrong_exponent,
  divergent_mean,
  divergent_near_field,
  redraw_limit,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::insufficient_atoms: return "InsufficientAtoms";
    case errc::invalid_pair: return "InvalidPair";
    case errc::invalid_geometry: return "InvalidGeometry";
    case errc::invalid_ratio: return "InvalidRatio";
    case errc::cell_sampling_exhausted: return "CellSamplingExhausted";
    case errc::pole: return "PoleError";
    case errc::branch_point: return "BranchPointError";
    case errc::domain: return "DomainError";
    case errc::integration: return "IntegrationError";
    case errc::wrong_exponent: return "WrongExponent";
    case errc::divergent_mean: return "DivergentMean";
    case errc::divergent_near_field: return "DivergentNearField";
    case errc::redraw_limit: return "RedrawLimit";
  }
  return "Unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Failures of the Monte Carlo pipeline, as opposed to numerical ones.
inline bool is_simulation_error(errc code) {
  return code == errc::cell_sampling_exhausted || code == errc::redraw_limit ||
         code == errc::insufficient_atoms;
}

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) throw error(code, what);
}

}  // namespace coopcov
