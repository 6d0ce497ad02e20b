#pragma once

#include <stdexcept>
#include <string>

namespace fedmesh {

// Rejected input: bad file, bad schema, violated invariant. CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure while running an otherwise valid configuration. CLI maps this to exit 1.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedmesh
