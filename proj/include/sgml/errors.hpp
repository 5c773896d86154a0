#pragma once

#include <stdexcept>
#include <string>

namespace sgml {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// First eigenvector has an entry too close to zero to invert safely.
struct DegenerateEigenvector : std::runtime_error {
    explicit DegenerateEigenvector(int index, double value)
        : std::runtime_error("eigenvector entry " + std::to_string(index) +
                             " is degenerate (" + std::to_string(value) + ")"),
          index(index), value(value) {}
    int index;
    double value;
};

/// Eigenvector signs disagree with the blue/red node coloring.
struct SignPatternViolation : std::runtime_error {
    explicit SignPatternViolation(int index)
        : std::runtime_error("eigenvector sign at node " + std::to_string(index) +
                             " is inconsistent with its color"),
          index(index) {}
    int index;
};

struct InfeasibleFloors : std::runtime_error {
    InfeasibleFloors(double floor_sum, double budget)
        : std::runtime_error("diagonal floors sum " + std::to_string(floor_sum) +
                             " exceeds trace budget " + std::to_string(budget)) {}
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    long line;
};

struct UnsupportedLabelSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sgml
