#pragma once

namespace gjepa {

/// Command-line entry point. Returns 0 on success, 1 on a runtime failure
/// (reported as one JSON object on stderr) and 2 on a usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace gjepa
