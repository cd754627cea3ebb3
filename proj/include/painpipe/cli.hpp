#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace painpipe::cli {

/// Runs one subcommand: synth, ingest, stats, folds, train, evaluate, report,
/// plot or validate-config. Results go to `out`; the resolved seed, config
/// digest and diagnostics go to `err`. Returns 0 on success, 1 on a runtime
/// or configuration error and 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace painpipe::cli
