#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbtrap {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define RBTRAP_ERROR_TYPE(Name)                                    \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}    \
    }

// expression DSL
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t position, std::string expected)
        : Error(what), position(position), expected(std::move(expected)) {}
    std::size_t position;
    std::string expected;
};
class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(const std::string& what, std::size_t position)
        : Error(what), position(position) {}
    std::size_t position;
};
RBTRAP_ERROR_TYPE(DomainError);

// perturbation profile
RBTRAP_ERROR_TYPE(TailNotResolved);
RBTRAP_ERROR_TYPE(NonPositiveMean);
RBTRAP_ERROR_TYPE(OutOfRange);

// kernels
RBTRAP_ERROR_TYPE(InvalidWindow);
RBTRAP_ERROR_TYPE(SingularAtZeroMu);

// convolution / mode system
RBTRAP_ERROR_TYPE(NonPositiveRate);
RBTRAP_ERROR_TYPE(TruncationMismatch);
RBTRAP_ERROR_TYPE(NoConvergence);
RBTRAP_ERROR_TYPE(ContractionViolated);

// dispersion
RBTRAP_ERROR_TYPE(AssumptionViolated);
RBTRAP_ERROR_TYPE(WindowViolated);
RBTRAP_ERROR_TYPE(ComplexLeak);
RBTRAP_ERROR_TYPE(EmptyCurve);

// field
RBTRAP_ERROR_TYPE(TailUnderflow);

// oracle
RBTRAP_ERROR_TYPE(NoBoundStateFound);
RBTRAP_ERROR_TYPE(LinearSolveFailure);

// config
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line) : Error(what), line(line) {}
    int line;
};
RBTRAP_ERROR_TYPE(ValidationError);

#undef RBTRAP_ERROR_TYPE

} // namespace rbtrap
