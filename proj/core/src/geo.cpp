#include "trove/geo.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "trove/error.hpp"

namespace trove {

double normalize_angle(double a) {
  double r = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  if (r >= kPi) r -= 2.0 * kPi;
  if (r < -kPi) r += 2.0 * kPi;
  return r;
}

double wrap_orientation(double a) {
  double r = a - kPi * std::floor(a / kPi);
  if (r >= kPi) r -= kPi;
  if (r < 0.0) r = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Polygon2

Polygon2 Polygon2::from_points(std::vector<Vec2> points) {
  std::vector<Vec2> v;
  v.reserve(points.size());
  for (const auto& p : points) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) {
      throw Error(Errc::DegenerateInput, "polygon vertex is not finite");
    }
    if (v.empty() || (p - v.back()).norm() > kClipEpsilon) v.push_back(p);
  }
  while (v.size() > 1 && (v.front() - v.back()).norm() <= kClipEpsilon) v.pop_back();
  if (v.size() < 3) throw Error(Errc::DegenerateInput, "polygon needs at least 3 distinct vertices");
  const double a = signed_area(v);
  if (std::abs(a) <= kMinArea) throw Error(Errc::DegenerateInput, "polygon has zero area");
  if (!is_simple(v)) throw Error(Errc::DegenerateInput, "polygon is self-intersecting");
  if (a < 0) std::reverse(v.begin(), v.end());
  return Polygon2(std::move(v));
}

double Polygon2::perimeter() const {
  double s = 0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    s += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
  }
  return s;
}

// ---------------------------------------------------------------------------
// OrientedBox2 / RigidTransform

std::array<Vec2, 4> OrientedBox2::corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Vec2 u(c * half_extents.x(), s * half_extents.x());
  const Vec2 v(-s * half_extents.y(), c * half_extents.y());
  return {center + u - v, center + u + v, center - u + v, center - u - v};
}

RigidTransform RigidTransform::from_yaw(double yaw, const Vec3& t) {
  return {Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t};
}

RigidTransform RigidTransform::from_matrix(const Mat3& r, const Vec3& t) {
  return {Quat(r).normalized(), t};
}

RigidTransform RigidTransform::operator*(const RigidTransform& o) const {
  return {(rotation * o.rotation).normalized(), rotation * o.translation + translation};
}

RigidTransform RigidTransform::inverse() const {
  const Quat inv = rotation.conjugate();
  return {inv, -(inv * translation)};
}

double RigidTransform::orthonormality_residual() const {
  const Mat3 r = matrix();
  return (r.transpose() * r - Mat3::Identity()).norm();
}

bool RigidTransform::is_valid(double tol) const {
  return std::abs(rotation.norm() - 1.0) <= tol && translation.allFinite() &&
         rotation.coeffs().allFinite();
}

// ---------------------------------------------------------------------------
// Polygons

double signed_area(std::span<const Vec2> pts) {
  if (pts.size() < 3) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += cross2(pts[i], pts[(i + 1) % pts.size()]);
  }
  return 0.5 * s;
}

double polygon_area(const Polygon2& p) { return signed_area(p.vertices()); }

namespace {

int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  return (v > 0) - (v < 0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_touch(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = pts[i];
    const Vec2& a2 = pts[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2& b1 = pts[j];
      const Vec2& b2 = pts[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // adjacent edges may only share their common vertex; a fold-back
        // (collinear overlap) is a self-intersection
        const Vec2& shared = (j == i + 1) ? a2 : a1;
        const Vec2& other_a = (j == i + 1) ? a1 : a2;
        const Vec2& other_b = (j == i + 1) ? b2 : b1;
        if (orient(shared, other_a, other_b) == 0 &&
            (other_a - shared).dot(other_b - shared) > 0) {
          return false;
        }
        continue;
      }
      if (segments_touch(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

Polygon2 convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) {
    return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
  });
  p.erase(std::unique(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a == b; }),
          p.end());
  if (p.size() < 3) throw Error(Errc::DegenerateInput, "convex hull needs 3 distinct points");
  std::vector<Vec2> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], p[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 1] - hull[k - 2], p[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3 || signed_area(hull) <= kMinArea) {
    throw Error(Errc::DegenerateInput, "all points are collinear");
  }
  return Polygon2::from_points(std::move(hull));
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2 edge = clip[(e + 1) % m] - a;
    const double len = edge.norm();
    if (len <= kClipEpsilon) continue;
    auto dist = [&](const Vec2& p) { return cross2(edge, p - a) / len; };
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& cur = in[i];
      const Vec2& prev = in[(i + in.size() - 1) % in.size()];
      const double dc = dist(cur), dp = dist(prev);
      const bool cur_in = dc >= -kClipEpsilon, prev_in = dp >= -kClipEpsilon;
      if (cur_in) {
        if (!prev_in) out.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  return out;
}

namespace {

auto box_key(const OrientedBox2& b) {
  return std::make_tuple(b.center.x(), b.center.y(), b.half_extents.x(), b.half_extents.y(), b.yaw);
}

}  // namespace

double intersection_area(const OrientedBox2& a, const OrientedBox2& b) {
  // clip in a canonical argument order so the result is exactly symmetric
  const bool swap = box_key(b) < box_key(a);
  const OrientedBox2& clipper = swap ? b : a;
  const OrientedBox2& subject = swap ? a : b;
  const auto cc = clipper.corners();
  const auto sc = subject.corners();
  const auto poly = clip_convex(sc, cc);
  const double area = std::abs(signed_area(poly));
  return area < kMinArea ? 0.0 : area;
}

double iou_xy(const OrientedBox2& a, const OrientedBox2& b) {
  if (box_key(a) == box_key(b)) return 1.0;
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d1 = cross2(b - a, p - a);
  const double d2 = cross2(c - b, p - b);
  const double d3 = cross2(a - c, p - c);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double distance_to_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  if (point_in_triangle(p, a, b, c)) return 0.0;
  return std::min({distance_to_segment(p, a, b), distance_to_segment(p, b, c),
                   distance_to_segment(p, c, a)});
}

double distance_to_polyline(const Vec2& p, std::span<const Vec2> line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return (p - line[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    best = std::min(best, distance_to_segment(p, line[i], line[i + 1]));
  }
  return best;
}

double polyline_length(std::span<const Vec2> line) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) s += (line[i + 1] - line[i]).norm();
  return s;
}

}  // namespace trove
