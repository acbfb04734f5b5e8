#pragma once

#include <stdexcept>
#include <string>

namespace kcover {

// Base of every library exception. `is_schema()` separates malformed input
// (CLI exit code 2) from numeric failures (exit code 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual bool is_schema() const noexcept { return false; }
};

class SchemaError : public Error {
public:
    using Error::Error;
    bool is_schema() const noexcept override { return true; }
};

class InvalidPolygon : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class DegenerateGenerators : public Error {
public:
    using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
    using Error::Error;
};

class ZeroMass : public Error {
public:
    using Error::Error;
};

class ArityMismatch : public Error {
public:
    using Error::Error;
};

class RadarSingularity : public Error {
public:
    using Error::Error;
};

class StepRejected : public Error {
public:
    using Error::Error;
};

class NotAFixedPoint : public Error {
public:
    using Error::Error;
};

class DegenerateCenters : public Error {
public:
    using Error::Error;
};

class EmptyRegion : public Error {
public:
    using Error::Error;
};

class MaxRestartsExceeded : public Error {
public:
    using Error::Error;
};

class TooLarge : public Error {
public:
    using Error::Error;
};

}  // namespace kcover
