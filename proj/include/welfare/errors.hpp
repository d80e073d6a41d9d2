#ifndef WELFARE_ERRORS_HPP
#define WELFARE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace welfare {

// Base class for all library errors so callers can catch the whole family.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sample construction and level validation.
struct EmptySample : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct NonPositiveWeight : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct UnsortedLevels : Error { using Error::Error; };
struct InvalidLevel : Error { using Error::Error; };

// Optimization layer.
struct LpNumericalFailure : Error { using Error::Error; };

// Simulation scenarios.
struct InvalidScenario : Error { using Error::Error; };
struct InvalidCovariate : Error { using Error::Error; };
struct GroupMismatch : Error { using Error::Error; };
struct InvalidSlackBound : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct EmptyTreatedCell : Error { using Error::Error; };
struct NoTreatedDraws : Error { using Error::Error; };

// File interfaces.
struct MissingFile : Error { using Error::Error; };
struct BadHeader : Error { using Error::Error; };
struct DuplicateGroupId : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct BadConfig : Error { using Error::Error; };

} // namespace welfare

#endif
