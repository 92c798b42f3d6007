#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascade::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name. Nothing is written
/// to the process streams except through `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace cascade::cli
