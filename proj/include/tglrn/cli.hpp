#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tglrn::cli {

// args excludes the program name: `<command> [--config FILE] [--key value | --key=value]...`.
// Returns the process exit code: 0 ok, 2 config, 3 data, 4 numeric, 5 gradcheck.
// Failures print one `ERROR:<code>: message` line to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tglrn::cli
