#pragma once

#include <Eigen/Geometry>
#include <array>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace trove {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

// Vertices closer than this are treated as coincident by the clipping code.
inline constexpr double kClipEpsilon = 1e-9;
// Intersection polygons below this area count as empty.
inline constexpr double kMinArea = 1e-12;

// Wraps to [-pi, pi).
double normalize_angle(double a);
// Wraps an undirected orientation to [0, pi).
double wrap_orientation(double a);

// Simple, counter-clockwise, positive-area polygon. from_points re-orients
// clockwise input and throws Error(DegenerateInput) otherwise.
class Polygon2 {
 public:
  static Polygon2 from_points(std::vector<Vec2> points);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }
  double perimeter() const;

 private:
  explicit Polygon2(std::vector<Vec2> v) : vertices_(std::move(v)) {}
  std::vector<Vec2> vertices_;
};

struct OrientedBox2 {
  Vec2 center = Vec2::Zero();
  Vec2 half_extents = Vec2::Ones();
  double yaw = 0.0;

  // CCW corner order starting at (+l/2, -w/2) in the box frame.
  std::array<Vec2, 4> corners() const;
  double area() const { return 4.0 * half_extents.x() * half_extents.y(); }
};

struct RigidTransform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  static RigidTransform from_matrix(const Mat3& r, const Vec3& t);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }
  // (a * b)(p) == a(b(p))
  RigidTransform operator*(const RigidTransform& other) const;
  RigidTransform inverse() const;

  Mat3 matrix() const { return rotation.toRotationMatrix(); }
  // Frobenius norm of R^T R - I.
  double orthonormality_residual() const;
  bool is_valid(double tol = 1e-9) const;

  // Exact coefficient equality.
  bool operator==(const RigidTransform& o) const {
    return rotation.coeffs() == o.rotation.coeffs() && translation == o.translation;
  }
};

// Signed shoelace area; positive for CCW order.
double signed_area(std::span<const Vec2> pts);
double polygon_area(const Polygon2& p);
bool is_simple(std::span<const Vec2> pts);

// Andrew's monotone chain. Collinear boundary points are dropped.
// Throws Error(DegenerateInput) when the points span no area.
Polygon2 convex_hull(std::span<const Vec2> points);

// Sutherland-Hodgman clip of a polygon against a convex CCW clip polygon.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

// Footprint IoU of two oriented boxes in the XY plane.
double iou_xy(const OrientedBox2& a, const OrientedBox2& b);
// Intersection area used by iou_xy.
double intersection_area(const OrientedBox2& a, const OrientedBox2& b);

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);
// Closed-triangle test (boundary counts as inside).
bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);
double distance_to_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);
double distance_to_polyline(const Vec2& p, std::span<const Vec2> line);
double polyline_length(std::span<const Vec2> line);

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace trove
