#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bilinreg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatches and violated preconditions on user input.
struct InvalidArgument : Error {
    using Error::Error;
};

struct SingularMatrix : Error {
    double condition;
    SingularMatrix(const std::string& what, double cond) : Error(what), condition(cond) {}
};

struct NotHurwitz : Error {
    double max_real_part;
    NotHurwitz(const std::string& what, double re) : Error(what), max_real_part(re) {}
};

struct ZeroDCGain : Error {
    double value;
    ZeroDCGain(const std::string& what, double v) : Error(what), value(v) {}
};

struct ReferenceUnreachable : Error {
    double reference, r_min, r_max;
    ReferenceUnreachable(const std::string& what, double r, double lo, double hi)
        : Error(what), reference(r), r_min(lo), r_max(hi) {}
};

struct NotObservable : Error {
    using Error::Error;
};

struct MissingObserverState : Error {
    using Error::Error;
};

struct NonFinite : Error {
    std::size_t step;
    double time;
    NonFinite(const std::string& what, std::size_t k, double t) : Error(what), step(k), time(t) {}
};

/// Malformed input file; line and column are 1-based, 0 when unknown.
struct ParseError : Error {
    int line;
    int column;
    ParseError(const std::string& what, int l = 0, int c = 0) : Error(what), line(l), column(c) {}
};

struct SchedulesDiffer : Error {
    using Error::Error;
};

}  // namespace bilinreg
