#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splinegeo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input vector or dataset does not match the network dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value, file or configuration violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry handed to the polygon kernel.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A query point lies outside the region it was asked about.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Gradient descent produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int step) : Error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

/// Subdivision exceeded its tile budget. Carries what was built before giving up.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, std::size_t tiles_so_far, int layer_reached)
        : Error(what), tiles_so_far_(tiles_so_far), layer_reached_(layer_reached) {}
    std::size_t tiles_so_far() const noexcept { return tiles_so_far_; }
    int layer_reached() const noexcept { return layer_reached_; }

private:
    std::size_t tiles_so_far_;
    int layer_reached_;
};

/// Every importance weight in a sample pool vanished.
class DegeneratePoolError : public Error {
public:
    using Error::Error;
};

/// No parameter step small enough to keep all activation patterns fixed.
class RegionTooSmallError : public Error {
public:
    using Error::Error;
};

}  // namespace splinegeo
