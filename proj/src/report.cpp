#include "nfde/report.hpp"

#include <algorithm>
#include <cmath>

namespace nfde {

double relative_margin(double lhs, double rhs) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
  return (rhs - lhs) / scale;
}

void CheckReport::record(double margin, std::string_view where) {
  ++samples;
  if (!(margin >= -tolerance)) ++violations;
  if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
  if (margin < worst_margin) {
    worst_margin = margin;
    location = std::string(where);
  }
}

void CheckReport::finalize() { pass = !(worst_margin < -tolerance); }

json CheckReport::to_json() const {
  json j;
  j["check"] = check;
  j["pass"] = pass;
  j["worst_margin"] = std::isfinite(worst_margin) ? json(worst_margin) : json(nullptr);
  j["location"] = location;
  j["tolerance"] = tolerance;
  j["converged"] = converged ? json(*converged) : json(nullptr);
  j["samples"] = samples;
  j["violations"] = violations;
  j["skipped"] = skipped;
  j["details"] = details;
  return j;
}

}  // namespace nfde
