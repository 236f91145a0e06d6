#pragma once

#include <stdexcept>
#include <string>

namespace alcgan {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a shape, range or format contract.
/// `field()` names the offending input (e.g. "attributes[3]", "layout").
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// File system or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A layer produced or consumed NaN/Inf. `layer()` names it.
class NonFiniteError : public Error {
public:
    explicit NonFiniteError(std::string layer)
        : Error("non-finite values in layer '" + layer + "'"), layer_(std::move(layer)) {}

    const std::string& layer() const noexcept { return layer_; }

private:
    std::string layer_;
};

} // namespace alcgan
