#pragma once

#include <iosfwd>

namespace pointscene::cli {

// Parses argv and runs one subcommand. Progress goes to `out` as one JSON
// line per subcommand; failures print a single JSON line to `err`.
// Returns 0 on success, 1 for validation errors, 2 for I/O errors and 3
// for backend errors.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace pointscene::cli
