#pragma once

#include <stdexcept>
#include <string>

namespace natval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration (missing files, bad keys, absent credentials).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace natval
