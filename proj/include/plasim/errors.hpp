#pragma once

#include <stdexcept>
#include <string>

namespace plasim {

// Base for everything thrown on purpose. Callers that need to map failures to
// process exit codes catch these; anything else escaping is a plain bug.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input file / bad option value. CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Harmonic kernel evaluated where |sin(omega*(z_b-z_a))| < 1e-9. The classical
// endpoint problem is degenerate at the same places, so both throw this.
struct FocalSingularity : Error {
    using Error::Error;
};

// Every sample of a pointwise quotient fell below the division floor.
struct DivisionFloor : Error {
    using Error::Error;
};

// A scan window that contains no grid samples.
struct EmptyScan : Error {
    using Error::Error;
};

// Derivative or argmin asked for on fewer samples than the stencil needs.
struct InsufficientSamples : Error {
    using Error::Error;
};

// Momentum-space reference amplitude too small to divide by (e.g. an odd
// input state has exactly zero overlap with the k=0 mode).
struct ZeroMomentumReference : Error {
    using Error::Error;
};

} // namespace plasim
