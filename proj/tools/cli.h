#ifndef SLATEBANDIT_TOOLS_CLI_H_
#define SLATEBANDIT_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace slatebandit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace slatebandit::cli

#endif  // SLATEBANDIT_TOOLS_CLI_H_
