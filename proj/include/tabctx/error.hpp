#pragma once

#include <stdexcept>
#include <string>

namespace tabctx {

// Base for every error raised by the library. Subclasses name the category so
// callers (the harness in particular) can decide whether a failure is fatal
// for the whole sweep or only for one experiment cell.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ragged columns, empty tables, malformed CSV rows, duplicate headers.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Values that violate a data invariant (label outside {0,1}, bad date).
class DataError : public Error {
public:
    using Error::Error;
};

// Rules, recipes or plans that reference things that do not exist.
class ConfigError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

// A context cannot be built from the pool (e.g. one class only).
class DegenerateContextError : public Error {
public:
    using Error::Error;
};

// Predictor preconditions (empty or single-class window).
class ContractError : public Error {
public:
    using Error::Error;
};

// Metric undefined for the input, e.g. AUC with a single class.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// External backend could not be launched, died, or timed out.
class BackendError : public Error {
public:
    using Error::Error;
};

// External backend answered with something that is not the protocol.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Train/test contamination detected.
class LeakageError : public Error {
public:
    using Error::Error;
};

// A report was requested over a slice with no usable records.
class EmptyReportError : public Error {
public:
    using Error::Error;
};

}  // namespace tabctx
