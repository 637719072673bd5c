#pragma once

#include <stdexcept>
#include <string>

namespace sse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid specification / configuration value; `field` names the offender.
struct ValidationError : Error {
    ValidationError(std::string field_, const std::string& msg)
        : Error(field_ + ": " + msg), field(std::move(field_)) {}
    std::string field;
};

// Syntax error in the sequence text format.
struct ParseError : Error {
    ParseError(int line_, int col_, const std::string& msg)
        : Error("line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
    int line;
    int col;
};

// Semantically invalid sequence (overlaps, events past end, ...).
struct SequenceError : Error {
    using Error::Error;
};

// External data (CSV/JSON) does not match the documented schema.
struct SchemaError : Error {
    using Error::Error;
};

// Numerical failure: non-finite state, singular system, non-convergence.
struct NumericalError : Error {
    using Error::Error;
};

struct InsufficientDataError : Error {
    using Error::Error;
};

}  // namespace sse
