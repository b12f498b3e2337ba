// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace specgnn {

// Malformed data passed to an operation (shape mismatch, asymmetric
// adjacency, label out of range, ...).
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// A configuration value outside its legal range (phi <= 0, tau <= 0, ...).
class InvalidConfig : public std::runtime_error {
 public:
  explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: NaN/Inf intermediates, excessive imaginary residue.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// On-disk format violation (corpus JSON, checkpoint container).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specgnn
