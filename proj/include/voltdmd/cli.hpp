#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace voltdmd {

/// Bad command line or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Entry point of the `voltdmd` tool: synth | fit | simulate | sweep | transfer.
/// Returns 0 on success, 1 on runtime or data errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "a:b:step" (inclusive) or a comma list such as "1,2,4".
std::vector<Eigen::Index> parse_grid(const std::string& text);

}  // namespace voltdmd
