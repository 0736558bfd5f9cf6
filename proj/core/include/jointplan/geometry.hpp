#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace jointplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  bool operator==(const Vec2&) const = default;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

// Position plus heading. The heading is normalized on construction.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double heading_)
      : x(x_), y(y_), heading(normalize_angle(heading_)) {}

  Vec2 position() const { return {x, y}; }
  Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
  bool operator==(const Pose2&) const = default;
};

// Full extents of a vehicle footprint.
struct BoxDims {
  double length = 4.5;
  double width = 2.0;
};

struct OrientedBox {
  Pose2 center;
  double half_length = 0.5;
  double half_width = 0.5;

  OrientedBox() = default;
  OrientedBox(const Pose2& c, double hl, double hw);
  OrientedBox(const Pose2& c, const BoxDims& dims)
      : OrientedBox(c, 0.5 * dims.length, 0.5 * dims.width) {}

  // Counter-clockwise, starting at front-left.
  std::array<Vec2, 4> corners() const;
  // Radius of the circumscribed circle.
  double bounding_radius() const { return std::hypot(half_length, half_width); }
};

// Piecewise-linear curve with precomputed cumulative arclength.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& arclengths() const { return arclengths_; }
  double length() const { return arclengths_.empty() ? 0.0 : arclengths_.back(); }
  std::size_t num_segments() const { return points_.empty() ? 0 : points_.size() - 1; }

  // Point at arclength s. Values outside [0, length] extrapolate linearly
  // along the first/last segment.
  Vec2 point_at(double s) const;
  // Direction of the segment containing arclength s.
  double heading_at(double s) const;

 private:
  std::size_t segment_at(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> arclengths_;
};

struct PolylineProjection {
  double distance = 0.0;
  double arclength = 0.0;
  std::size_t segment = 0;
};

// Separating-axis test over the four face normals. Touching counts.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

// Zero inside or on the box, Euclidean distance to the boundary otherwise.
double point_to_box_distance(const Vec2& p, const OrientedBox& b);

// Nearest point over all segments; ties resolve to the smaller arclength.
PolylineProjection project_to_polyline(const Vec2& p, const Polyline& line);

}  // namespace jointplan
