#pragma once

#include <stdexcept>
#include <string>

namespace pcurv {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class domain_error : public error {
public:
    using error::error;
};

/// An eigenvalue tuple (or a grid node) is not strictly inside the cone.
///
/// `index` is the first j with sigma_j <= 0 (1-based, 0 if unknown) and
/// `node` the grid node that failed (-1 for pointwise evaluations).
class admissibility_error : public error {
public:
    admissibility_error(const std::string& what, int index, int node = -1)
        : error(what), index_(index), node_(node) {}

    [[nodiscard]] int index() const noexcept { return index_; }
    [[nodiscard]] int node() const noexcept { return node_; }

private:
    int index_;
    int node_;
};

/// A profile or grid is too coarse for the requested stencil.
class discretization_error : public error {
public:
    using error::error;
};

/// Equation coefficients violate a structural hypothesis (ellipticity etc.).
class parameter_error : public error {
public:
    using error::error;
};

/// Scenario configuration is incomplete or inconsistent.
class validation_error : public error {
public:
    using error::error;
};

}  // namespace pcurv
