#pragma once

#include <stdexcept>
#include <string>

namespace rmt {

// Base class for all toolkit errors. Subcommands catch this at the top
// level and turn it into a nonzero exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Parallel files whose line counts disagree.
class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& msg) : Error(msg) {}
};

// A reserved token showed up in raw corpus text.
class ContaminationError : public Error {
 public:
  explicit ContaminationError(const std::string& msg) : Error(msg) {}
};

// A documented invariant was violated (double tagging, tagged input where
// untagged was required, ...).
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Shape or vocabulary-size mismatches in model code.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

}  // namespace rmt
