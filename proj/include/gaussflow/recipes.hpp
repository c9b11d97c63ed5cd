#pragma once

// Closed-form graph patches used by the tests, the acceptance suite and the
// experiment runner.

#include <vector>

#include "gaussflow/grassmann.hpp"
#include "gaussflow/patch.hpp"

namespace gaussflow::recipes {

/// u(x) = A x + b on the box [lo, hi].
GraphPatch affine(const Matrix& slope, const Vector& offset, std::vector<double> lo,
                  std::vector<double> hi, std::vector<int> grid, Boundary boundary);

/// n = 2: u^1 = amplitude sin(w x1) cos(w x2), other components zero, on
/// the periodic box [-pi/w, pi/w)^2.
GraphPatch sine_product(int m, double amplitude, double wavenumber, int nodes);

/// n = 2: u^1 = amplitude sin(w x1) sin(w x2) on [-pi/w, pi/w)^2. The
/// origin is a saddle with H = 0 and |B|^2 = 2 amplitude^2 w^4, and the odd
/// symmetry in each coordinate keeps F(0) = 0 along the flow.
GraphPatch saddle(int m, double amplitude, double wavenumber, int nodes);

/// u^alpha = amplitude sin(w x_alpha) for alpha < n, zero beyond, periodic
/// box [-pi/w, pi/w)^n. Max slope is (1 + amplitude^2)^{n/2} at the origin.
GraphPatch sine_sum(int n, int m, double amplitude, double wavenumber, int nodes);

/// Grim reaper u^1 = -log cos x1 on |x1| <= pi/2 - delta, times the flat
/// factor [-half_width, half_width]^{n-1}; translates with unit speed in the
/// u^1 direction. Fixed-affine boundary.
GraphPatch grim_reaper(int n, int m, double delta, double half_width, int nodes_x1,
                       int nodes_other);

/// Unit vector of the grim reaper's translation (the u^1 axis).
Vector grim_reaper_velocity(int n, int m);

/// Lower hemisphere u^1 = -sqrt(radius^2 - |x|^2) over [-half_width,
/// half_width]^n. radius = sqrt(2n) gives a self-shrinker.
GraphPatch sphere_graph(int n, int m, double radius, double half_width, int nodes);

}  // namespace gaussflow::recipes
