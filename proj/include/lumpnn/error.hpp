#pragma once

#include <stdexcept>
#include <string>

namespace lumpnn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not agree with the layer they are fed to.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A lumping (or elimination list) that does not satisfy its defining equations
/// was handed to a construction that requires a valid one.
class InvalidLumping : public Error {
public:
    using Error::Error;
};

/// An internal consistency check failed (e.g. a computed maximum relation did
/// not pass re-verification).
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace lumpnn
