#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace segwave {

// Bad arguments or data that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A segment with zero energy where a positive variance is required.
class DegenerateSegment : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No admissible changepoint candidate in a search grid.
class NoCandidate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChainFailure : public std::runtime_error {
public:
    ChainFailure(const std::string& what, std::size_t iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

// File-level problems: unreadable, malformed or unsupported containers.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace segwave
