#pragma once

#include <stdexcept>
#include <string>

namespace bbm {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The particle population outgrew SimConfig::max_particles.
class PopulationCapError : public std::runtime_error {
public:
    PopulationCapError(double time_reached, std::size_t cap)
        : std::runtime_error("population-cap: more than " + std::to_string(cap) +
                             " particles at time " + std::to_string(time_reached)),
          time_reached_(time_reached) {}

    double time_reached() const noexcept { return time_reached_; }

private:
    double time_reached_;
};

/// Adaptive quadrature did not reach its tolerance. Carries the best bracket
/// found before giving up, in whatever domain the caller reports (the
/// log-domain routines report log bounds).
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double lower, double upper)
        : std::runtime_error(what), lower_(lower), upper_(upper) {}

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }

private:
    double lower_;
    double upper_;
};

}  // namespace bbm
