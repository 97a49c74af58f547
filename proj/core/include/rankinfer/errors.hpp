#pragma once

#include <stdexcept>
#include <string>

namespace rankinfer {

/// Bad arguments or malformed input data (CLI exit code 2).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A model produced an object violating its contract, e.g. a non-PSD block integral.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative routine failed to converge.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rankinfer
