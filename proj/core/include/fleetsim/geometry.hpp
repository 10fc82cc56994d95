#pragma once

#include <vector>

namespace fleetsim {

inline constexpr double kEarthRadiusM = 6371000.0;

/// Great-circle distance between two lon/lat points in degrees.
double haversine_m(double lon_a, double lat_a, double lon_b, double lat_b);

double euclidean_m(double x_a, double y_a, double x_b, double y_b);

struct Point2 {
  double x = 0;
  double y = 0;
};

/// Area of the convex hull of a point set (monotone chain + shoelace).
/// Throws ValidationError for fewer than 3 distinct points or a collinear set.
double convex_hull_area(std::vector<Point2> points);

}  // namespace fleetsim
