#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reflectopt {

// Exit codes of the command-line front end.
enum ExitCode : int
{
  ExitOk = 0,
  ExitUnexpected = 1,
  ExitConfig = 2,
  ExitNumeric = 3,
  ExitTimeout = 4
};

// args excludes the program name. Messages go to err, progress lines to out.
int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace reflectopt
