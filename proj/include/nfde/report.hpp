#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace nfde {

using json = nlohmann::json;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Signed relative slack of lhs <= rhs; positive means slack.
double relative_margin(double lhs, double rhs);

struct CheckReport {
  std::string check;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string location;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  std::optional<bool> converged;
  json details = json::object();

  CheckReport() = default;
  CheckReport(std::string name, double tol) : check(std::move(name)), tolerance(tol) {}

  void record(double margin, std::string_view where);
  void skip() { ++skipped; }
  // Recomputes pass from the worst margin.
  void finalize();

  json to_json() const;
};

}  // namespace nfde
