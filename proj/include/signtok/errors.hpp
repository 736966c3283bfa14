#pragma once

#include <stdexcept>
#include <string>

namespace signtok {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text / wire records.
struct ParseError : Error {
  using Error::Error;
};

// File system and transport-level failures.
struct IoError : Error {
  using Error::Error;
};

// Violated operation precondition (dimension mismatch, empty input, ...).
struct ContractError : Error {
  using Error::Error;
};

// Structurally valid file whose content breaks a format invariant.
struct FormatError : Error {
  using Error::Error;
};

// Word outside the toy lexicon.
struct VocabError : Error {
  using Error::Error;
};

// Non-finite loss or other optimizer failure; carries the step index in the message.
struct TrainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// A pipeline stage was invoked before its upstream artifact exists.
struct DependencyError : Error {
  using Error::Error;
};

// Chat client could not reach the endpoint (after retries).
struct TransportError : Error {
  using Error::Error;
};

// Training sample does not fit the model context window.
struct SampleTooLongError : Error {
  using Error::Error;
};

}  // namespace signtok
