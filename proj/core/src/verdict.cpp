#include "auxlab/verdict.hpp"

#include <limits>

namespace auxlab {

double OracleVerdict::residual(std::string_view name) const {
  for (const Residual& r : residuals) {
    if (r.name == name) return r.value;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace auxlab
