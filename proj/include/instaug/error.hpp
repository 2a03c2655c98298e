#pragma once

#include <stdexcept>
#include <string>

namespace instaug {

// Root of the library's error hierarchy. Everything thrown on purpose by
// instaug derives from this, so callers can isolate per-item failures with a
// single catch while letting genuinely unexpected exceptions escape.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read, written or renamed.
class IoError : public Error {
public:
    using Error::Error;
};

// Structurally invalid input (JSON, XML, RLE strings, PNG streams).
class ParseError : public Error {
public:
    using Error::Error;
};

// Dataset-level problem: referenced files missing, image/mask size mismatch.
class LoadError : public Error {
public:
    using Error::Error;
};

// Images or maps with incompatible or degenerate dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A mask with no set pixels where one is required.
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

// Persisted data written by an incompatible schema version.
class VersionError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A model backend reported a failure for a well-formed request.
class BackendError : public Error {
public:
    using Error::Error;
};

// Transport-level backend failure that persisted through retries.
class BackendUnavailableError : public BackendError {
public:
    using BackendError::BackendError;
};

// Backend response arrived but did not follow the wire contract.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

// Scene analysis produced maps that violate their invariants.
class AnalysisError : public Error {
public:
    using Error::Error;
};

// A manifest entry could not be turned back into pixels.
class AssemblyError : public Error {
public:
    using Error::Error;
};

// Variant generation failed for reasons other than backend transport.
class GenerationError : public Error {
public:
    using Error::Error;
};

// An existing manifest cannot be continued (config drift, schema change).
class ResumeError : public Error {
public:
    using Error::Error;
};

}  // namespace instaug
