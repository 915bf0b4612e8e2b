#pragma once

#include <cmath>

namespace treelink {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double c, Point2 p) { return {c * p.x, c * p.y}; }
  friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
};

inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) { return std::sqrt(squared_norm(p)); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Axis-aligned rectangular spatial domain.
struct Domain {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double diagonal() const { return std::sqrt(width() * width() + height() * height()); }
  Point2 midpoint() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  Point2 clamp(Point2 p) const;
  void validate() const;  // throws ValidationError unless xmin < xmax and ymin < ymax
};

// Rotation by `theta` about `mu` followed by translation `t`. File-space
// transforms rotate about the midpoint of the analysis domain.
struct RigidTransform {
  double theta = 0.0;  // radians, |theta| <= pi
  Point2 t;
  Point2 mu;
};

// R(theta)(s - mu) + t + mu with R the counterclockwise rotation matrix.
Point2 apply_transform(const RigidTransform& tr, Point2 s);

// Exact inverse of apply_transform.
Point2 invert_transform(const RigidTransform& tr, Point2 y);

// Each side moved outward by `margin` (>= 0).
Domain expand_domain(const Domain& d, double margin);

}  // namespace treelink
