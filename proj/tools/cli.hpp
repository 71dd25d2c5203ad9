#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdeint::cli {

//! Runs the command line `args` (program name excluded). Results go to `out`,
//! diagnostics and {"error": CODE, ...} records to `err`. Returns the exit
//! status: 0 on success, 2 for usage errors, 3 and up for library errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

//! Exit status used for a library error code.
int exit_status_for(const std::string& code);

} // namespace kdeint::cli
