#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "cubetop/error.hpp"

namespace cubetop::cli {

/// Invalid configuration; the message starts with the JSON path of the field.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Runs the command line `args` (without the program name). Returns the exit
/// status; diagnostics go to `err`, short summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cubetop::cli
