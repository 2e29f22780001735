#pragma once

#include <stdexcept>
#include <string>

namespace qrc {

// A model violates one of the structural assumptions (negative hazard,
// broken bracket, atom at zero, ...). Raised at validation or when a
// violation is detected at runtime.
struct model_error : std::runtime_error {
    explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric routine failed to converge (quantile bracketing, quadrature
// panel budget, non-normalizable coupler mass, ...).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration / CLI input problems. Mapped to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qrc
