#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "jointplan/errors.hpp"
#include "jointplan/geometry.hpp"
#include "support/oracles.hpp"

using namespace jointplan;

namespace {

OrientedBox unit_box(double x, double y, double heading = 0.0) { return OrientedBox(Pose2(x, y, heading), 0.5, 0.5); }

Pose2 transform(const Pose2& p, double tx, double ty, double rot) {
  const double c = std::cos(rot);
  const double s = std::sin(rot);
  return Pose2(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty, p.heading + rot);
}

Vec2 transform(const Vec2& p, double tx, double ty, double rot) {
  const Pose2 q = transform(Pose2(p.x, p.y, 0.0), tx, ty, rot);
  return {q.x, q.y};
}

}  // namespace

TEST(Angle, NormalizesIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(normalize_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(normalize_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(normalize_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(normalize_angle(0.25 + 4.0 * std::numbers::pi), 0.25, 1e-12);
  EXPECT_NEAR(Pose2(0, 0, -1.5 * std::numbers::pi).heading, 0.5 * std::numbers::pi, 1e-12);
}

TEST(OrientedBox, RejectsNonPositiveExtents) {
  EXPECT_THROW(OrientedBox(Pose2(), 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(OrientedBox(Pose2(), 1.0, -1.0), InvalidArgument);
}

TEST(OrientedBox, CornersReconstructCenterAndHeading) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int n = 0; n < 200; ++n) {
    const OrientedBox b(Pose2(u(rng), u(rng), u(rng)), 0.1 + std::abs(u(rng)), 0.1 + std::abs(u(rng)));
    const auto c = b.corners();
    const Vec2 center = (c[0] + c[1] + c[2] + c[3]) * 0.25;
    EXPECT_NEAR(center.x, b.center.x, 1e-9);
    EXPECT_NEAR(center.y, b.center.y, 1e-9);
    const Vec2 fwd = (c[0] + c[3]) * 0.5 - center;
    EXPECT_NEAR(normalize_angle(std::atan2(fwd.y, fwd.x) - b.center.heading), 0.0, 1e-9);
  }
}

TEST(BoxesOverlap, IdenticalBoxes) { EXPECT_TRUE(boxes_overlap(unit_box(0, 0), unit_box(0, 0))); }

TEST(BoxesOverlap, SeparatedAlongX) { EXPECT_FALSE(boxes_overlap(unit_box(0, 0), unit_box(3, 0))); }

TEST(BoxesOverlap, TouchingCounts) { EXPECT_TRUE(boxes_overlap(unit_box(0, 0), unit_box(1.0, 0))); }

TEST(BoxesOverlap, RotatedNeighbourMatchesRasterOracle) {
  const OrientedBox a = unit_box(0, 0);
  const OrientedBox b = unit_box(0.9, 0, std::numbers::pi / 4);
  EXPECT_EQ(boxes_overlap(a, b), oracle::sampled_overlap(a, b, 1e-3));
  EXPECT_TRUE(boxes_overlap(a, b));
  // Just out of reach: the rotated corner sits at 0.5 + sqrt(2)/2 from b's center.
  const OrientedBox far = unit_box(0.5 + std::sqrt(0.5) + 0.01, 0, std::numbers::pi / 4);
  EXPECT_EQ(boxes_overlap(a, far), oracle::sampled_overlap(a, far, 1e-3));
  EXPECT_FALSE(boxes_overlap(a, far));
}

TEST(BoxesOverlap, AgreesWithRasterOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-4, 4);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> ext(0.3, 2.5);
  int compared = 0;
  for (int n = 0; n < 1000; ++n) {
    const OrientedBox a(Pose2(0, 0, ang(rng)), ext(rng), ext(rng));
    const OrientedBox b(Pose2(pos(rng), pos(rng), ang(rng)), ext(rng), ext(rng));
    const bool sat = boxes_overlap(a, b);
    ASSERT_EQ(sat, boxes_overlap(b, a));
    const bool sampled = oracle::sampled_overlap(a, b, 1e-3);
    // Skip near-contact pairs the 1 mm grid cannot resolve.
    if (!sampled && oracle::polygon_gap(a, b) < 2e-3) continue;
    if (sampled && oracle::vertex_penetration(a, b) < 2e-3 && oracle::polygon_gap(a, b) < 2e-3) continue;
    ++compared;
    EXPECT_EQ(sat, sampled) << "pair " << n;
  }
  EXPECT_GT(compared, 980);
}

TEST(PointToBox, InteriorIsZero) { EXPECT_EQ(point_to_box_distance({0, 0}, unit_box(0, 0)), 0.0); }

TEST(PointToBox, FaceNormal) { EXPECT_DOUBLE_EQ(point_to_box_distance({2, 0}, OrientedBox(Pose2(), 1, 1)), 1.0); }

TEST(PointToBox, RotatedMatchesBoundarySampling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int n = 0; n < 200; ++n) {
    const OrientedBox b(Pose2(u(rng) * 0.2, u(rng) * 0.2, u(rng)), 2.25, 1.0);
    const Vec2 p{u(rng), u(rng)};
    EXPECT_NEAR(point_to_box_distance(p, b), oracle::sampled_point_box_distance(p, b, 10000), 1e-3);
    EXPECT_EQ(point_to_box_distance(p, b) == 0.0, oracle::inside_box(p, b));
  }
}

TEST(Polyline, RejectsDegenerateInput) {
  EXPECT_THROW(Polyline({{0, 0}}), InvalidArgument);
  EXPECT_THROW(Polyline({{0, 0}, {0, 0}}), InvalidArgument);
}

TEST(Polyline, ArclengthIncreasesStrictly) {
  const Polyline l({{0, 0}, {3, 4}, {3, 10}});
  EXPECT_DOUBLE_EQ(l.length(), 11.0);
  EXPECT_DOUBLE_EQ(l.point_at(7.0).y, 6.0);
  EXPECT_NEAR(l.heading_at(7.0), std::numbers::pi / 2, 1e-12);
}

TEST(Projection, PointOnLine) {
  const Polyline l({{0, 0}, {10, 0}});
  EXPECT_EQ(project_to_polyline({4, 0}, l).distance, 0.0);
}

TEST(Projection, PerpendicularFoot) {
  const auto r = project_to_polyline({5, 2}, Polyline({{0, 0}, {10, 0}}));
  EXPECT_DOUBLE_EQ(r.distance, 2.0);
  EXPECT_DOUBLE_EQ(r.arclength, 5.0);
}

TEST(Projection, CornerOfLShapeMatchesDenseSampling) {
  const Polyline l({{0, 0}, {10, 0}, {10, 10}});
  for (Vec2 p : {Vec2{10.5, -0.5}, Vec2{9.0, 1.0}, Vec2{11, 1}, Vec2{9.7, 0.2}, Vec2{12, -3}}) {
    const auto r = project_to_polyline(p, l);
    const auto o = oracle::sampled_projection(p, l, 1e-3);
    EXPECT_NEAR(r.distance, o.distance, 1e-3);
    EXPECT_NEAR(r.arclength, o.arclength, 2e-3);
  }
}

TEST(Projection, TiesGoToSmallerArclength) {
  // Equidistant from both legs of the corner.
  const Polyline l({{0, 0}, {10, 0}, {10, 10}});
  const auto r = project_to_polyline({9, 1}, l);
  EXPECT_DOUBLE_EQ(r.distance, 1.0);
  EXPECT_DOUBLE_EQ(r.arclength, 9.0);
}

TEST(Projection, InvariantUnderRigidTransforms) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int n = 0; n < 200; ++n) {
    std::vector<Vec2> pts{{0, 0}, {5, 1}, {9, -3}, {14, 2}};
    const Vec2 p{u(rng), u(rng)};
    const double tx = u(rng), ty = u(rng), rot = u(rng);
    std::vector<Vec2> moved;
    for (const Vec2& q : pts) moved.push_back(transform(q, tx, ty, rot));
    const auto a = project_to_polyline(p, Polyline(pts));
    const auto b = project_to_polyline(transform(p, tx, ty, rot), Polyline(moved));
    EXPECT_NEAR(a.distance, b.distance, 1e-9);
  }
}
