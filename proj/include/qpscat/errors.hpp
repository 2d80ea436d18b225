#pragma once

#include <stdexcept>
#include <string>

namespace qpscat {

/// Bad user input: config file contents, parameter combinations.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometry that cannot be meshed or solved on (intersections, collisions).
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// API misuse (wrong segment kind, dimension mismatch).
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Kernel evaluated at a coincident source/target pair.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Linear-algebra failure; carries the offending layer (1-based, 0 = n/a).
struct SolverError : std::runtime_error {
    int layer = 0;
    SolverError(const std::string& msg, int layer_index = 0)
        : std::runtime_error(msg), layer(layer_index) {}
};

/// Precompute would exceed the configured memory budget.
struct MemoryBudgetError : std::runtime_error {
    std::size_t required_bytes = 0;
    MemoryBudgetError(const std::string& msg, std::size_t required)
        : std::runtime_error(msg), required_bytes(required) {}
};

} // namespace qpscat
