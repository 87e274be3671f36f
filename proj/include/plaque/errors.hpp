#pragma once

#include <stdexcept>
#include <string>

namespace plaque {

enum class ErrorCode {
    newton_diverged,
    max_iterations,
    mu_below_critical,
    no_sign_change,
    singular_system,
    asymptotic_guess_below_critical,
    kernel_degenerate,
    non_monotone,
    invalid_argument,
};

inline const char* error_tag(ErrorCode c) {
    switch (c) {
    case ErrorCode::newton_diverged: return "newton-diverged";
    case ErrorCode::max_iterations: return "max-iterations";
    case ErrorCode::mu_below_critical: return "mu-below-critical";
    case ErrorCode::no_sign_change: return "no-sign-change";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::asymptotic_guess_below_critical: return "asymptotic-guess-below-critical";
    case ErrorCode::kernel_degenerate: return "kernel-degenerate";
    case ErrorCode::non_monotone: return "non-monotone";
    case ErrorCode::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

/// Solver failure carrying a stable tag; what() reads "tag: details".
class SolverError : public std::runtime_error {
public:
    SolverError(ErrorCode code, const std::string& details)
        : std::runtime_error(std::string(error_tag(code)) + ": " + details), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace plaque
