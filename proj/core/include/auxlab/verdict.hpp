#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace auxlab {

struct Residual {
  std::string name;
  double value = 0.0;
  // Absent for purely informational measurements.
  std::optional<double> tolerance;
};

// Outcome of a verification. A passing verdict has every toleranced residual
// within its tolerance.
struct OracleVerdict {
  std::string check;
  bool pass = false;
  std::vector<Residual> residuals;
  std::optional<std::vector<double>> witness;
  std::string notes;

  void add(std::string name, double value, std::optional<double> tolerance = std::nullopt) {
    residuals.push_back(Residual{std::move(name), value, tolerance});
  }
  // NaN if absent.
  double residual(std::string_view name) const;
};

}  // namespace auxlab
