#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nfde {

struct CliInvocation {
  std::string subcommand;  // solve | verify | kernels | sweep | plot
  std::string config;      // manifest path for plot
  std::string out;
  bool quiet = false;
  int dt_halving = 0;
  std::optional<std::vector<std::string>> checks;
};

// 0: success with all checks passing; 1: a check failed; 2: config or IO error.
int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; usage errors exit 2.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nfde
