#pragma once

#include <stdexcept>
#include <string>

namespace boxlab {

// Shape or dimension mismatch in numeric code.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation requested a signal the handle does not expose
// (e.g. confidence queries against a label-only target).
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Remote call failed after the configured number of retries.
struct TransportError : std::runtime_error {
  TransportError(const std::string& what, int retries_attempted)
      : std::runtime_error(what), retries(retries_attempted) {}
  int retries;
};

// Malformed input file; `line` is 1-based.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  std::size_t line;
};

// Invalid configuration value or unknown config key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A generation class produced zero samples that survive target validation.
struct StarvationError : std::runtime_error {
  StarvationError(const std::string& what, int class_id_)
      : std::runtime_error(what), class_id(class_id_) {}
  int class_id;
};

}  // namespace boxlab
