#include "jointplan/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "jointplan/errors.hpp"

namespace jointplan {

double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

OrientedBox::OrientedBox(const Pose2& c, double hl, double hw)
    : center(c), half_length(hl), half_width(hw) {
  if (!(hl > 0.0) || !(hw > 0.0)) {
    throw InvalidArgument("OrientedBox: half extents must be positive");
  }
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 c = center.position();
  const Vec2 f = center.forward() * half_length;
  const Vec2 l = Vec2{-std::sin(center.heading), std::cos(center.heading)} * half_width;
  return {c + f + l, c - f + l, c - f - l, c + f - l};
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw InvalidArgument("Polyline: needs at least two points");
  }
  arclengths_.reserve(points_.size());
  arclengths_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double seg = (points_[i] - points_[i - 1]).norm();
    if (!std::isfinite(seg) || seg <= 1e-9) {
      throw InvalidArgument("Polyline: consecutive points must be distinct and finite");
    }
    arclengths_.push_back(arclengths_.back() + seg);
  }
}

std::size_t Polyline::segment_at(double s) const {
  if (s <= 0.0) return 0;
  auto it = std::upper_bound(arclengths_.begin(), arclengths_.end(), s);
  std::size_t idx = static_cast<std::size_t>(it - arclengths_.begin());
  idx = idx == 0 ? 0 : idx - 1;
  return std::min(idx, num_segments() - 1);
}

Vec2 Polyline::point_at(double s) const {
  const std::size_t seg = segment_at(s);
  const Vec2 a = points_[seg];
  const Vec2 b = points_[seg + 1];
  const double len = arclengths_[seg + 1] - arclengths_[seg];
  const double t = (s - arclengths_[seg]) / len;
  return a + (b - a) * t;
}

double Polyline::heading_at(double s) const {
  const std::size_t seg = segment_at(s);
  const Vec2 d = points_[seg + 1] - points_[seg];
  return std::atan2(d.y, d.x);
}

namespace {

// Projects the box onto a unit axis and returns [min, max].
std::pair<double, double> project_box(const std::array<Vec2, 4>& corners, const Vec2& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec2& c : corners) {
    const double v = c.dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  // Cheap reject on circumscribed circles.
  const double reach = a.bounding_radius() + b.bounding_radius();
  if ((a.center.position() - b.center.position()).squared_norm() > reach * reach) {
    return false;
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      a.center.forward(), Vec2{-std::sin(a.center.heading), std::cos(a.center.heading)},
      b.center.forward(), Vec2{-std::sin(b.center.heading), std::cos(b.center.heading)}};
  for (const Vec2& axis : axes) {
    const auto [alo, ahi] = project_box(ca, axis);
    const auto [blo, bhi] = project_box(cb, axis);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

double point_to_box_distance(const Vec2& p, const OrientedBox& b) {
  const Vec2 d = p - b.center.position();
  const double c = std::cos(b.center.heading);
  const double s = std::sin(b.center.heading);
  const double lx = c * d.x + s * d.y;
  const double ly = -s * d.x + c * d.y;
  const double ex = std::max(std::abs(lx) - b.half_length, 0.0);
  const double ey = std::max(std::abs(ly) - b.half_width, 0.0);
  return std::hypot(ex, ey);
}

PolylineProjection project_to_polyline(const Vec2& p, const Polyline& line) {
  const auto& pts = line.points();
  const auto& arc = line.arclengths();
  PolylineProjection best{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 seg = pts[i + 1] - pts[i];
    const double len2 = seg.squared_norm();
    const double t = std::clamp((p - pts[i]).dot(seg) / len2, 0.0, 1.0);
    const double dist = (p - (pts[i] + seg * t)).norm();
    if (dist < best.distance) {
      best = {dist, arc[i] + t * (arc[i + 1] - arc[i]), i};
    }
  }
  return best;
}

}  // namespace jointplan
