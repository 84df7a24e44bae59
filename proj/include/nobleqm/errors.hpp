#pragma once

#include <stdexcept>
#include <string>

namespace nobleqm {

// Base of every error thrown by the library. The CLI maps subclasses to
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

// Step size does not resolve the fastest rate of the full model.
class StiffnessError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class DegenerateRates : public Error {
public:
    using Error::Error;
};

class NotNormalized : public Error {
public:
    using Error::Error;
};

class InvalidRegime : public Error {
public:
    using Error::Error;
};

// Raised by matched shaping when the requested kernel needs a negative
// stimulated rate; t_begin/t_end bracket the offending interval.
class Unreachable : public Error {
public:
    Unreachable(const std::string &what, double t_begin, double t_end)
        : Error(what), t_begin(t_begin), t_end(t_end) {}
    double t_begin;
    double t_end;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace nobleqm
