#pragma once

// The hybridvc front end. Exit statuses: 0 ok, 1 usage or parse error,
// 2 analysis error, 3 monitor violation, 4 runtime error.

#include <iosfwd>
#include <string>
#include <vector>

namespace hvc::cli {

enum Status { kOk = 0, kUsage = 1, kAnalysis = 2, kViolation = 3, kRuntime = 4 };

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hvc::cli
