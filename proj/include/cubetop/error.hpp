#pragma once

#include <stdexcept>

namespace cubetop {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or malformed input files.
class IoError : public Error {
public:
  using Error::Error;
};

/// A summary statistic that is not defined for the given lifetimes
/// (empty set, zero total persistence, zero variance).
class UndefinedStatistic : public Error {
public:
  using Error::Error;
};

} // namespace cubetop
