#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gaussflow/errors.hpp"
#include "gaussflow/graphgeom.hpp"
#include "gaussflow/recipes.hpp"

using namespace gaussflow;

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t node_at(const GraphPatch& p, std::vector<double> x) { return p.nearest_node(x); }

// Exact jet of u^1 = A sin(x1) cos(x2) (other components zero).
Jet sine_product_jet(int m, double A, double x1, double x2) {
  Jet j;
  j.n = 2;
  j.m = m;
  j.du = SmallMatrix::Zero(m, 2);
  j.du(0, 0) = A * std::cos(x1) * std::cos(x2);
  j.du(0, 1) = -A * std::sin(x1) * std::sin(x2);
  for (int a = 0; a < m; ++a) j.d2u[static_cast<std::size_t>(a)] = SmallMatrix::Zero(2, 2);
  auto& h = j.d2u[0];
  h(0, 0) = -A * std::sin(x1) * std::cos(x2);
  h(1, 1) = -A * std::sin(x1) * std::cos(x2);
  h(0, 1) = h(1, 0) = -A * std::cos(x1) * std::sin(x2);
  return j;
}

Jet random_jet(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.7);
  Jet j;
  j.n = n;
  j.m = m;
  j.du = SmallMatrix(m, n);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) j.du(a, i) = g(rng);
  for (int a = 0; a < m; ++a) {
    SmallMatrix s(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) s(i, k) = s(k, i) = g(rng);
    j.d2u[static_cast<std::size_t>(a)] = s;
  }
  return j;
}

}  // namespace

TEST(Jacobian, ExactOnAffine) {
  Matrix a(3, 2);
  a << 1, 2, -3, 0.5, 0.25, -1;
  const GraphPatch p = recipes::affine(a, Vector::Zero(3), {0, 0}, {1, 1}, {9, 9}, Boundary::FixedAffine);
  const std::size_t node = node_at(p, {0.5, 0.5});
  EXPECT_LT((jacobian(p, node) - a).norm(), 1e-13);
  EXPECT_LT((jacobian(p, node, DiffOrder::Fourth) - a).norm(), 1e-13);
}

TEST(Jacobian, SineSlopeAtOriginConverges) {
  double prev2 = 0, prev4 = 0;
  for (int N : {16, 32, 64}) {
    const GraphPatch p = recipes::sine_sum(1, 1, 1.0, 1.0, N);
    const std::size_t node = node_at(p, {0.0});
    const double e2 = std::abs(jacobian(p, node)(0, 0) - 1.0);
    const double e4 = std::abs(jacobian(p, node, DiffOrder::Fourth)(0, 0) - 1.0);
    if (prev2 > 0) {
      EXPECT_NEAR(prev2 / e2, 4.0, 0.8);
      EXPECT_NEAR(prev4 / e4, 16.0, 3.2);
    }
    prev2 = e2;
    prev4 = e4;
  }
}

TEST(Jacobian, BoundaryNodeThrows) {
  const GraphPatch p = recipes::sphere_graph(2, 2, 2.0, 1.0, 9);
  EXPECT_THROW(jacobian(p, 0), StencilError);
  EXPECT_THROW(jet(p, 0), StencilError);
  const std::size_t near_edge = node_at(p, {1.0 - 0.25, 0.0});
  EXPECT_NO_THROW(jacobian(p, near_edge));
  EXPECT_THROW(jacobian(p, near_edge, DiffOrder::Fourth), StencilError);
}

TEST(GaussPlane, FlatPlaneIsReference) {
  const Plane p = graph_plane(Matrix::Zero(2, 2));
  EXPECT_NEAR(w_pairing(p, reference_plane(2, 2)), 1.0, 1e-15);
  Matrix du(1, 1);
  du << 1.0;
  EXPECT_NEAR(slope_v(graph_plane(du), reference_plane(1, 1)), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(induced_metric(du)(0, 0), 2.0, 1e-15);
}

TEST(GaussPlane, DetMetricIsSlopeSquared) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const Jet j = random_jet(2, 3, rng);
    const Matrix du = j.du;
    const double v = slope_v(graph_plane(du), reference_plane(2, 3));
    EXPECT_NEAR(induced_metric(du).determinant(), v * v, 1e-10 * v * v);
  }
}

TEST(AdaptedFrame, OrthonormalAndAligned) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const Jet j = random_jet(2, 3, rng);
    const Matrix du = j.du;
    const AdaptedFrame f = adapted_frame(du);
    Matrix all(5, 5);
    all << f.tangent, f.normal;
    EXPECT_LT((all.transpose() * all - Matrix::Identity(5, 5)).norm(), 1e-12);
    // Tangents are the images of the coordinate vectors.
    Matrix dF(5, 2);
    dF << Matrix::Identity(2, 2), du;
    EXPECT_LT((dF * f.coord_tangent - f.tangent).norm(), 1e-12);
    const JordanSpectrum s = jordan_spectrum(graph_plane(du), reference_plane(2, 3));
    std::vector<double> sorted = f.lambdas;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(sorted[i], s.lambdas[i], 1e-9 * (1 + sorted[i]));
  }
}

TEST(ShapeTensor, SlotLayout) {
  ShapeTensor h(3, 2);
  EXPECT_EQ(h.dof(), 12u);
  h.set(1, 2, 0, 4.0);
  EXPECT_EQ(h(1, 0, 2), 4.0);
  EXPECT_DOUBLE_EQ(h.norm2(), 32.0);
  const auto idx = h.slot_indices(h.slot(1, 0, 2));
  EXPECT_EQ(idx[0], 1);
  EXPECT_EQ(idx[1], 0);
  EXPECT_EQ(idx[2], 2);
}

TEST(ShapeTensor, CircleArcCurvature) {
  const double R = 2.0;
  const GraphPatch p = GraphPatch::sample(1, 2, {-0.5}, {0.5}, {101}, Boundary::FixedAffine,
                                          [&](std::span<const double> x, std::span<double> u) {
                                            u[0] = -std::sqrt(R * R - x[0] * x[0]);
                                            u[1] = 0.0;
                                          });
  for (double x : {0.0, 0.3, -0.4}) {
    const std::size_t node = node_at(p, {x});
    EXPECT_NEAR(shape_tensor(p, node).norm2(), 1.0 / (R * R), 1e-4);
    EXPECT_NEAR(mean_curvature(p, node).norm(), 1.0 / R, 1e-4);
  }
}

TEST(ShapeTensor, AdaptedMatchesCoordinateNorm) {
  std::mt19937_64 rng(17);
  for (auto [n, m] : {std::pair{1, 1}, {2, 2}, {2, 3}, {3, 3}, {2, 4}}) {
    for (int t = 0; t < 50; ++t) {
      const Jet j = random_jet(n, m, rng);
      const double a = shape_tensor(j).norm2();
      EXPECT_NEAR(a, second_fundamental_norm2_coordinate(j), 1e-10 * (1 + a));
    }
  }
}

TEST(MeanCurvature, NormalAndTraceOfShapeTensor) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const Jet j = random_jet(2, 3, rng);
    const Vector H = mean_curvature(j);
    const ShapeTensor h = shape_tensor(j);
    const AdaptedFrame& f = *h.frame();
    EXPECT_LT((f.tangent.transpose() * H).norm(), 1e-10 * (1 + H.norm()));
    Vector trace = Vector::Zero(5);
    for (int a = 0; a < 3; ++a) trace += (h(a, 0, 0) + h(a, 1, 1)) * f.normal.col(a);
    EXPECT_LT((trace - H).norm(), 1e-10 * (1 + H.norm()));
    const Matrix du = j.du;
    EXPECT_LT((normal_projector(du) * H - H).norm(), 1e-10 * (1 + H.norm()));
  }
}

TEST(MeanCurvature, ChristoffelDriftIsTangentialCorrection) {
  // g^{ij} d_ij F = H + xi^k d_k F.
  std::mt19937_64 rng(29);
  for (int t = 0; t < 50; ++t) {
    const Jet j = random_jet(2, 2, rng);
    const Matrix du = j.du;
    const Matrix ginv = induced_metric(du).inverse();
    Vector lap = Vector::Zero(4);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int a = 0; a < 2; ++a) lap(2 + a) += ginv(i, k) * j.d2u[static_cast<std::size_t>(a)](i, k);
    Matrix dF(4, 2);
    dF << Matrix::Identity(2, 2), du;
    const Vector rebuilt = mean_curvature(j) + dF * christoffel_drift(j);
    EXPECT_LT((rebuilt - lap).norm(), 1e-10 * (1 + lap.norm()));
  }
}

TEST(ShapeTensor, InvariantUnderCodimensionRotation) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    Jet j = random_jet(2, 3, rng);
    const double before = shape_tensor(j).norm2();
    const double hbefore = mean_curvature(j).norm();
    const Matrix Q = random_rotation(3, 100 + static_cast<std::uint64_t>(t));
    Jet r = j;
    r.du = Q * Matrix(j.du);
    for (int a = 0; a < 3; ++a) {
      SmallMatrix s = SmallMatrix::Zero(2, 2);
      for (int b = 0; b < 3; ++b) s += Q(a, b) * j.d2u[static_cast<std::size_t>(b)];
      r.d2u[static_cast<std::size_t>(a)] = s;
    }
    EXPECT_NEAR(shape_tensor(r).norm2(), before, 1e-10 * (1 + before));
    EXPECT_NEAR(mean_curvature(r).norm(), hbefore, 1e-10 * (1 + hbefore));
  }
}

TEST(ShapeTensor, InvariantUnderAxisRelabel) {
  const GraphPatch p = recipes::sine_product(2, 0.4, 1.0, 32);
  const GraphPatch q = GraphPatch::sample(2, 2, p.lo(), p.hi(), p.grid(), Boundary::Periodic,
                                          [](std::span<const double> x, std::span<double> u) {
                                            u[0] = 0.4 * std::sin(x[1]) * std::cos(x[0]);
                                            u[1] = 0.0;
                                          });
  for (std::size_t node = 0; node < p.node_count(); node += 37) {
    const std::size_t swapped = static_cast<std::size_t>(p.index(node, 1)) * p.stride(0) +
                                static_cast<std::size_t>(p.index(node, 0));
    EXPECT_NEAR(shape_tensor(p, node).norm2(), shape_tensor(q, swapped).norm2(), 1e-12);
  }
}

TEST(ShapeTensor, SecondOrderConvergence) {
  const double A = 0.3;
  const Jet exact = sine_product_jet(2, A, -kPi / 4, kPi / 4);
  const double ref = second_fundamental_norm2_coordinate(exact);
  const Vector Href = mean_curvature(exact);
  double prev = 0, prevH = 0;
  for (int N : {16, 32, 64, 128}) {
    const GraphPatch p = recipes::sine_product(2, A, 1.0, N);
    const std::size_t node = node_at(p, {-kPi / 4, kPi / 4});
    const double err = std::abs(shape_tensor(p, node).norm2() - ref);
    const double errH = (mean_curvature(p, node) - Href).norm();
    if (prev > 0) {
      EXPECT_NEAR(prev / err, 4.0, 1.0);
      EXPECT_NEAR(prevH / errH, 4.0, 1.0);
    }
    prev = err;
    prevH = errH;
  }
}

TEST(Position, IsGraphPoint) {
  const GraphPatch p = recipes::sphere_graph(2, 2, 2.0, 1.0, 9);
  const std::size_t node = node_at(p, {0.0, 0.0});
  const Vector X = position(p, node);
  ASSERT_EQ(X.size(), 4);
  EXPECT_NEAR(X(2), -2.0, 1e-15);
  EXPECT_EQ(X(0), 0.0);
}
