#include "gaussflow/recipes.hpp"

#include <cmath>
#include <numbers>

#include "gaussflow/errors.hpp"

namespace gaussflow::recipes {

GraphPatch affine(const Matrix& slope, const Vector& offset, std::vector<double> lo,
                  std::vector<double> hi, std::vector<int> grid, Boundary boundary) {
  const int m = static_cast<int>(slope.rows());
  const int n = static_cast<int>(slope.cols());
  if (offset.size() != m) throw DimensionError("affine offset must have m entries");
  if (boundary == Boundary::Periodic && !slope.isZero(0.0)) {
    throw DomainError("a non-constant affine map is not periodic");
  }
  return GraphPatch::sample(n, m, std::move(lo), std::move(hi), std::move(grid), boundary,
                            [&](std::span<const double> x, std::span<double> u) {
                              for (int a = 0; a < m; ++a) {
                                double s = offset(a);
                                for (int i = 0; i < n; ++i) s += slope(a, i) * x[static_cast<std::size_t>(i)];
                                u[static_cast<std::size_t>(a)] = s;
                              }
                            });
}

GraphPatch sine_product(int m, double amplitude, double wavenumber, int nodes) {
  const double half = std::numbers::pi / wavenumber;
  return GraphPatch::sample(2, m, {-half, -half}, {half, half}, {nodes, nodes}, Boundary::Periodic,
                            [&](std::span<const double> x, std::span<double> u) {
                              for (auto& c : u) c = 0.0;
                              u[0] = amplitude * std::sin(wavenumber * x[0]) *
                                     std::cos(wavenumber * x[1]);
                            });
}

GraphPatch saddle(int m, double amplitude, double wavenumber, int nodes) {
  const double half = std::numbers::pi / wavenumber;
  return GraphPatch::sample(2, m, {-half, -half}, {half, half}, {nodes, nodes}, Boundary::Periodic,
                            [&](std::span<const double> x, std::span<double> u) {
                              for (auto& c : u) c = 0.0;
                              u[0] = amplitude * std::sin(wavenumber * x[0]) *
                                     std::sin(wavenumber * x[1]);
                            });
}

GraphPatch sine_sum(int n, int m, double amplitude, double wavenumber, int nodes) {
  if (m < n) throw DimensionError("sine_sum requires m >= n");
  const double half = std::numbers::pi / wavenumber;
  const auto un = static_cast<std::size_t>(n);
  return GraphPatch::sample(n, m, std::vector<double>(un, -half), std::vector<double>(un, half),
                            std::vector<int>(un, nodes), Boundary::Periodic,
                            [&](std::span<const double> x, std::span<double> u) {
                              for (auto& c : u) c = 0.0;
                              for (std::size_t a = 0; a < un; ++a)
                                u[a] = amplitude * std::sin(wavenumber * x[a]);
                            });
}

GraphPatch grim_reaper(int n, int m, double delta, double half_width, int nodes_x1,
                       int nodes_other) {
  if (!(delta > 0.0 && delta < std::numbers::pi / 2)) {
    throw DomainError("grim reaper needs delta in (0, pi/2)");
  }
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> lo(un, -half_width), hi(un, half_width);
  std::vector<int> grid(un, nodes_other);
  lo[0] = -std::numbers::pi / 2 + delta;
  hi[0] = std::numbers::pi / 2 - delta;
  grid[0] = nodes_x1;
  return GraphPatch::sample(n, m, lo, hi, grid, Boundary::FixedAffine,
                            [](std::span<const double> x, std::span<double> u) {
                              for (auto& c : u) c = 0.0;
                              u[0] = -std::log(std::cos(x[0]));
                            });
}

Vector grim_reaper_velocity(int n, int m) {
  Vector v = Vector::Zero(n + m);
  v(n) = 1.0;
  return v;
}

GraphPatch sphere_graph(int n, int m, double radius, double half_width, int nodes) {
  if (!(half_width * std::sqrt(static_cast<double>(n)) < radius)) {
    throw DomainError("sphere graph box must lie inside the equatorial disc");
  }
  const auto un = static_cast<std::size_t>(n);
  return GraphPatch::sample(n, m, std::vector<double>(un, -half_width),
                            std::vector<double>(un, half_width), std::vector<int>(un, nodes),
                            Boundary::FixedAffine,
                            [&](std::span<const double> x, std::span<double> u) {
                              for (auto& c : u) c = 0.0;
                              double r2 = 0.0;
                              for (double xi : x) r2 += xi * xi;
                              u[0] = -std::sqrt(radius * radius - r2);
                            });
}

}  // namespace gaussflow::recipes
