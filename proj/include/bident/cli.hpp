#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bident::cli {

// Exit statuses of run().
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kConfig = 2;
inline constexpr int kBackend = 3;
inline constexpr int kIo = 4;

// Runs one command line (without the program name). Results go to `out`;
// diagnostics and the structured error line go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bident::cli
