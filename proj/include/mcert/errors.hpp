#pragma once

#include <stdexcept>
#include <string>

namespace mcert {

// Error taxonomy shared by all modules. The CLI maps accuracy_error and
// numeric_error to exit code 3 and the rest to 2.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or non-finite input.
class input_error : public error {
public:
    using error::error;
};

// Input is well formed but outside the mathematical domain of the operation.
class domain_error : public error {
public:
    using error::error;
};

// A decomposition or iteration broke down.
class numeric_error : public error {
public:
    using error::error;
};

// A quadrature, truncation or grid could not reach the requested accuracy.
class accuracy_error : public error {
public:
    accuracy_error(const std::string& what, double estimate)
        : error(what), estimate_(estimate) {}

    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

// Exact integer result not representable.
class range_error : public error {
public:
    using error::error;
};

}  // namespace mcert
