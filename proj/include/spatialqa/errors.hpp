#pragma once

#include <stdexcept>
#include <string>

namespace spatialqa {

// Domain error types. Generation-side errors signal "skip this episode and
// move on"; the pipeline catches them per scene. Eval-side errors carry the
// failure reason to the report.

struct PlacementFailure : std::runtime_error {
  explicit PlacementFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NoValidCamera : std::runtime_error {
  explicit NoValidCamera(const std::string& what) : std::runtime_error(what) {}
};

struct TraceFailure : std::runtime_error {
  explicit TraceFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NoMovableObject : std::runtime_error {
  explicit NoMovableObject(const std::string& what) : std::runtime_error(what) {}
};

struct NoNavigablePoint : std::runtime_error {
  explicit NoNavigablePoint(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientObjects : std::runtime_error {
  explicit InsufficientObjects(const std::string& what) : std::runtime_error(what) {}
};

struct ObjectAtCamera : std::runtime_error {
  explicit ObjectAtCamera(const std::string& what) : std::runtime_error(what) {}
};

struct DerivationMismatch : std::runtime_error {
  explicit DerivationMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spatialqa
