#pragma once

#include <stdexcept>
#include <string>

namespace solitonlab {

/// File could not be opened, read or written.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Input file or config text is malformed.
class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Unknown key, unparsable value or inconsistent parameter set.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (overflow, non-convergence, degenerate root).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace solitonlab
