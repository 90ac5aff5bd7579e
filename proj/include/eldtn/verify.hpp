#pragma once

#include <string>
#include <vector>

namespace eldtn {

struct VerifyOptions {
  // Test hook: flips the sign of every DtN matrix before the positivity
  // checks, which must then fail.
  bool flip_dtn_sign = false;
};

struct VerifyGroup {
  std::string name;
  bool passed = true;
  int checks = 0;
  std::vector<std::string> failures;
};

/// Names of the self-check groups, in run order.
const std::vector<std::string>& verify_group_names();

/// Runs one group by name; throws InvalidParameter for an unknown name.
VerifyGroup run_verify_group(const std::string& name, const VerifyOptions& options = {});

}  // namespace eldtn
