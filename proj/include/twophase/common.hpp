#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace twophase {

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Raised when the vertex normals of an interface fail to span the plane.
class AssumptionAViolation : public Error {
 public:
  using Error::Error;
};

class HierarchyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StabilityViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace twophase
