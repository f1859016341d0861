#pragma once

#include <stdexcept>
#include <string>

namespace fbcool {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or type invariant on a domain value.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Configuration could not be parsed or validated. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// The closed loop diverged. Carries the loop parameters diagnosed at resonance.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, double loop_gain, double loop_phase)
        : Error(what), loop_gain_(loop_gain), loop_phase_(loop_phase) {}
    [[nodiscard]] double loop_gain() const noexcept { return loop_gain_; }
    [[nodiscard]] double loop_phase() const noexcept { return loop_phase_; }

private:
    double loop_gain_;
    double loop_phase_;
};

class FitError : public Error {
public:
    FitError(const std::string& what, double last_gain) : Error(what), last_gain_(last_gain) {}
    [[nodiscard]] double last_gain() const noexcept { return last_gain_; }

private:
    double last_gain_;
};

}  // namespace fbcool
