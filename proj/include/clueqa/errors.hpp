#pragma once

#include <stdexcept>
#include <string>

namespace clueqa {

// Exception taxonomy. Every failure the library raises derives from Error so
// callers (notably the CLI) can map categories to stable exit codes without
// string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed textual input (clue lines, data files, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input with out-of-range or inconsistent values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (unknown keys, invalid combinations, missing files
// named by config).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level trouble: unreadable/unwritable paths, truncated binary
// blobs, version mismatches.
class IoError : public Error {
 public:
  using Error::Error;
};

// Dataset-level inconsistency (episode referencing frames it does not have,
// vocabulary mismatch between checkpoint and dataset, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong lifecycle order (e.g. inference-stage
// training on a model that never saw decoupled training).
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Violated internal contract; indicates a bug rather than bad user input.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Synthetic generator could not satisfy the requested constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Token outside the metric taxonomy / model vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Dataset too small (or degenerate) for a statistical estimate.
class EstimationError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace clueqa
