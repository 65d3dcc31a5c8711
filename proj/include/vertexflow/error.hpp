#pragma once

#include <stdexcept>
#include <string>

namespace vertexflow {

/// Base class for every error raised by the library. The CLI maps the two
/// families below onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: configuration values, mesh files, rasters, well boxes.
class InvalidConfig : public Error {
public:
    using Error::Error;
};

/// A numerical failure: singular element or block, non-finite state,
/// linear or nonlinear iteration that did not converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularElement : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularBlock : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NumericState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PicardDivergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace vertexflow
