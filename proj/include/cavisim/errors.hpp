#pragma once

#include <stdexcept>
#include <string>

namespace cavisim {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numeric or structural argument violates a precondition.
class invalid_parameter : public error {
public:
    using error::error;
};

/// Two volumes do not live on the same grid (dims, spacing or origin differ).
class grid_mismatch : public error {
public:
    using error::error;
};

/// An operation requires a nonempty voxel set and got none.
class empty_support : public error {
public:
    using error::error;
};

/// A configuration document (label map, run config) is invalid.
class config_error : public error {
public:
    using error::error;
};

/// A file on disk could not be parsed; message carries path and offset.
class format_error : public error {
public:
    using error::error;
};

/// Low-level I/O failure (open, write, rename).
class io_error : public error {
public:
    using error::error;
};

/// A mesh violates the topological requirements of an operation.
class topology_error : public error {
public:
    using error::error;
};

/// All placement retries produced an empty cavity label.
class degenerate_cavity : public error {
public:
    using error::error;
};

} // namespace cavisim
