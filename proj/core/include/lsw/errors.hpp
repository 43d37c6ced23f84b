#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsw {

// Argument and range violations use std::invalid_argument / std::out_of_range.
// The types below cover the remaining failure kinds callers need to tell apart.

/// A requested key (channel, section, switch event) is absent.
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A waveform has no distinguishable level change to measure.
class NoTransitionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The regression basis is rank deficient.
class DegenerateBasisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fitness function produced a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(std::size_t particle, std::size_t iteration, double value)
        : std::runtime_error("fitness evaluation returned non-finite value " +
                             std::to_string(value) + " for particle " +
                             std::to_string(particle) + " at iteration " +
                             std::to_string(iteration)),
          particle_(particle), iteration_(iteration) {}

    std::size_t particle() const noexcept { return particle_; }
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t particle_;
    std::size_t iteration_;
};

}  // namespace lsw
