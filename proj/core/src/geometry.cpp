#include "fleetsim/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "fleetsim/errors.hpp"

namespace fleetsim {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}
}  // namespace

double haversine_m(double lon_a, double lat_a, double lon_b, double lat_b) {
  const double phi_a = lat_a * kDegToRad;
  const double phi_b = lat_b * kDegToRad;
  const double d_phi = (lat_b - lat_a) * kDegToRad;
  const double d_lambda = (lon_b - lon_a) * kDegToRad;
  const double s_phi = std::sin(d_phi / 2.0);
  const double s_lambda = std::sin(d_lambda / 2.0);
  const double h = s_phi * s_phi + std::cos(phi_a) * std::cos(phi_b) * s_lambda * s_lambda;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double euclidean_m(double x_a, double y_a, double x_b, double y_b) {
  return std::hypot(x_b - x_a, y_b - y_a);
}

double convex_hull_area(std::vector<Point2> points) {
  std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Point2& a, const Point2& b) {
                             return a.x == b.x && a.y == b.y;
                           }),
               points.end());
  const std::size_t n = points.size();
  if (n < 3) {
    throw ValidationError("convex hull needs at least 3 distinct points");
  }

  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);

  if (hull.size() < 3) {
    throw ValidationError("degenerate node set: all points are collinear");
  }
  double twice_area = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    twice_area += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice_area) / 2.0;
}

}  // namespace fleetsim
