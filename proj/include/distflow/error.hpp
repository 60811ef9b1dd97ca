#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace distflow {

/// Machine-checkable failure categories shared by every module.
enum class Errc {
    InvalidArgument,
    InvalidBus,
    CycleDetected,
    Disconnected,
    NonpositiveImpedance,
    NonpositiveVoltageLowerBound,
    DuplicateLine,
    NegativeScale,
    NonpositiveTolerance,
    NotConverged,
    NonconvexDevice,
    NumericalBreakdown,
    NonpositiveVoltage,
    NoViolation,
    NoEligiblePath,
    ParseError,
    UnknownDataset,
    NoFeasibleSamples,
    Io,
};

[[nodiscard]] constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "invalid argument";
        case Errc::InvalidBus: return "invalid bus";
        case Errc::CycleDetected: return "cycle detected";
        case Errc::Disconnected: return "disconnected";
        case Errc::NonpositiveImpedance: return "nonpositive impedance";
        case Errc::NonpositiveVoltageLowerBound: return "nonpositive voltage lower bound";
        case Errc::DuplicateLine: return "duplicate line";
        case Errc::NegativeScale: return "negative scale";
        case Errc::NonpositiveTolerance: return "nonpositive tolerance";
        case Errc::NotConverged: return "not converged";
        case Errc::NonconvexDevice: return "nonconvex device";
        case Errc::NumericalBreakdown: return "numerical breakdown";
        case Errc::NonpositiveVoltage: return "nonpositive voltage";
        case Errc::NoViolation: return "no violation";
        case Errc::NoEligiblePath: return "no eligible path";
        case Errc::ParseError: return "parse error";
        case Errc::UnknownDataset: return "unknown dataset";
        case Errc::NoFeasibleSamples: return "no feasible samples";
        case Errc::Io: return "i/o error";
    }
    return "unknown";
}

/// Build-network failures are validation errors when they surface through file loading.
[[nodiscard]] constexpr bool is_validation_error(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidBus:
        case Errc::CycleDetected:
        case Errc::Disconnected:
        case Errc::NonpositiveImpedance:
        case Errc::NonpositiveVoltageLowerBound:
        case Errc::DuplicateLine:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Raised by the sweep solver; carries the iteration count and last residual.
class NotConvergedError : public Error {
public:
    NotConvergedError(int iterations, double last_residual, const std::string& detail)
        : Error(Errc::NotConverged, detail + " (iterations=" + std::to_string(iterations) +
                                        ", residual=" + std::to_string(last_residual) + ")"),
          iterations_(iterations),
          last_residual_(last_residual) {}

    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
    int iterations_;
    double last_residual_;
};

/// Raised by the network file reader; carries the 1-based source line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error(Errc::ParseError, "line " + std::to_string(line) + ": " + reason),
          line_(line),
          reason_(reason) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

}  // namespace distflow
