#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace popac {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model violates a structural invariant (non-stochastic column, bad shape).
class StructuralError : public Error {
public:
    using Error::Error;
};

class ImpossibleObservation : public Error {
public:
    ImpossibleObservation(std::vector<double> belief, std::size_t action, std::size_t observation);

    std::vector<double> belief;
    std::size_t action;
    std::size_t observation;
};

class InsufficientData : public Error {
public:
    explicit InsufficientData(std::size_t action);
    std::size_t action;
};

class RankDeficient : public Error {
public:
    RankDeficient(const std::string& what, double singular_value);
    double singular_value;
};

class IllConditioned : public Error {
public:
    IllConditioned(const std::string& what, double value);
    double value;
};

class DecompositionFailed : public Error {
public:
    using Error::Error;
};

class AmbiguousAlignment : public Error {
public:
    AmbiguousAlignment(std::size_t first, std::size_t second, double distance);
    std::size_t first;
    std::size_t second;
    double distance;
};

/// Problem too large for an exact routine's guardrail.
class SizeError : public Error {
public:
    using Error::Error;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Pipeline failure with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what);
    std::string stage;
};

}  // namespace popac
