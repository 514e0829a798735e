#pragma once

#include <stdexcept>
#include <string>

namespace sphere_oep {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the trusted domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A profile failed to vanish before reaching the pole.
class NoZeroFound : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not make progress.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// Requested value lies outside a tabulated range.
class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Newton iteration exhausted its budget.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// The linearised operator could not be factorised.
class SingularLinearization : public Error {
public:
    using Error::Error;
};

/// No model solution realises the requested annulus.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// Solution and comparison model disagree on the maximum value.
class MismatchError : public Error {
public:
    using Error::Error;
};

/// The maximum set contains no closed curve.
class NoMaxCurve : public Error {
public:
    using Error::Error;
};

/// Level-set or boundary extraction failed.
class ExtractionError : public Error {
public:
    using Error::Error;
};

/// Gradient too small for the level-set curvature formula.
class NearCritical : public Error {
public:
    using Error::Error;
};

class UnknownSubcommand : public Error {
public:
    using Error::Error;
};

}  // namespace sphere_oep
