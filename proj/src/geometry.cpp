#include "treelink/geometry.hpp"

#include <algorithm>
#include <string>

#include "treelink/errors.hpp"

namespace treelink {

Point2 Domain::clamp(Point2 p) const {
  return {std::clamp(p.x, xmin, xmax), std::clamp(p.y, ymin, ymax)};
}

void Domain::validate() const {
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw Error(ErrorCode::ValidationError,
                "domain must satisfy xmin < xmax and ymin < ymax");
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin) || !std::isfinite(xmax) ||
      !std::isfinite(ymax)) {
    throw Error(ErrorCode::ValidationError, "domain bounds must be finite");
  }
}

Point2 apply_transform(const RigidTransform& tr, Point2 s) {
  const double c = std::cos(tr.theta);
  const double sn = std::sin(tr.theta);
  const Point2 d = s - tr.mu;
  return Point2{c * d.x - sn * d.y, sn * d.x + c * d.y} + tr.t + tr.mu;
}

Point2 invert_transform(const RigidTransform& tr, Point2 y) {
  const double c = std::cos(tr.theta);
  const double sn = std::sin(tr.theta);
  const Point2 d = y - tr.t - tr.mu;
  // R(-theta) applied to the de-translated point.
  return Point2{c * d.x + sn * d.y, -sn * d.x + c * d.y} + tr.mu;
}

Domain expand_domain(const Domain& d, double margin) {
  if (margin < 0.0) {
    throw Error(ErrorCode::ValidationError, "expand_domain requires margin >= 0");
  }
  return {d.xmin - margin, d.ymin - margin, d.xmax + margin, d.ymax + margin};
}

}  // namespace treelink
