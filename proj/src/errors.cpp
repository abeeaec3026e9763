#include "popac/errors.hpp"

#include <sstream>

namespace popac {

namespace {

std::string describe_belief(const std::vector<double>& b) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) os << ", ";
        os << b[i];
    }
    os << ')';
    return os.str();
}

}  // namespace

ImpossibleObservation::ImpossibleObservation(std::vector<double> b, std::size_t a, std::size_t z)
    : Error("observation " + std::to_string(z) + " has zero probability after action " +
            std::to_string(a) + " from belief " + describe_belief(b)),
      belief(std::move(b)),
      action(a),
      observation(z) {}

InsufficientData::InsufficientData(std::size_t a)
    : Error("no moment triples for action " + std::to_string(a)), action(a) {}

RankDeficient::RankDeficient(const std::string& what, double sv)
    : Error(what + " (singular value " + std::to_string(sv) + ")"), singular_value(sv) {}

IllConditioned::IllConditioned(const std::string& what, double v)
    : Error(what + " (value " + std::to_string(v) + ")"), value(v) {}

AmbiguousAlignment::AmbiguousAlignment(std::size_t i, std::size_t j, double d)
    : Error("reference columns " + std::to_string(i) + " and " + std::to_string(j) +
            " are within L1 distance " + std::to_string(d)),
      first(i),
      second(j),
      distance(d) {}

StageError::StageError(std::string s, const std::string& what)
    : Error("stage '" + s + "': " + what), stage(std::move(s)) {}

}  // namespace popac
