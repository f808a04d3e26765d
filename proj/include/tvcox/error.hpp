#pragma once
#include <stdexcept>
#include <string>
#include <string_view>

namespace tvcox {

enum class ErrorCode
{
    usage,
    io,
    schema,
    parse,
    domain,
    invalid_spec,
    knot_collision,
    degenerate_covariate,
    overflow,
    capacity,
    conditioning,
    ascent_violation,
    step_size,
    rank_deficient,
    numerical,
    fold_construction,
    not_converged,
};

inline constexpr std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::usage: return "USAGE";
        case ErrorCode::io: return "IO";
        case ErrorCode::schema: return "SCHEMA";
        case ErrorCode::parse: return "PARSE";
        case ErrorCode::domain: return "DOMAIN";
        case ErrorCode::invalid_spec: return "INVALID_SPEC";
        case ErrorCode::knot_collision: return "KNOT_COLLISION";
        case ErrorCode::degenerate_covariate: return "DEGENERATE_COVARIATE";
        case ErrorCode::overflow: return "OVERFLOW";
        case ErrorCode::capacity: return "CAPACITY";
        case ErrorCode::conditioning: return "CONDITIONING";
        case ErrorCode::ascent_violation: return "ASCENT_VIOLATION";
        case ErrorCode::step_size: return "STEP_SIZE";
        case ErrorCode::rank_deficient: return "RANK_DEFICIENT";
        case ErrorCode::numerical: return "NUMERICAL";
        case ErrorCode::fold_construction: return "FOLD_CONSTRUCTION";
        case ErrorCode::not_converged: return "NOT_CONVERGED";
    }
    return "UNKNOWN";
}

/// Single exception type for the library. The code is stable and
/// machine-parsable; the message is for humans.
class Error : public std::runtime_error
{
    ErrorCode code_;

public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }
};

} // namespace tvcox
