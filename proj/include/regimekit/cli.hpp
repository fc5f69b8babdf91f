#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace regimekit {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitMissingArtifact = 2, kExitIntegrityPanic = 3 };

/// Entry point shared by the tool and the integration tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regimekit
