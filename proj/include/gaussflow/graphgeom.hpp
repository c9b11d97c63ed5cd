#pragma once

// Discrete differential geometry of graph submanifolds F(x) = (x, u(x)):
// finite-difference jets, induced metric, Gauss plane, adapted frames, the
// second fundamental form and the mean curvature vector.

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gaussflow/grassmann.hpp"
#include "gaussflow/patch.hpp"

namespace gaussflow {

using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2 * kMaxDim, 2 * kMaxDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2 * kMaxDim, 1>;

enum class DiffOrder { Second, Fourth };

/// First and second derivatives of u at one node.
struct Jet {
  int n = 0;
  int m = 0;
  SmallMatrix du;                          // m x n, du(alpha, i) = d_i u^alpha
  std::array<SmallMatrix, kMaxDim> d2u;    // per alpha: n x n, symmetric
};

/// Central-difference Du at `node` (m x n). Fixed-affine patches throw
/// StencilError on boundary nodes.
Matrix jacobian(const GraphPatch& patch, std::size_t node, DiffOrder order = DiffOrder::Second);

/// Du and D^2u by 2nd-order central stencils; mixed second derivatives use
/// the four-point cross stencil.
Jet jet(const GraphPatch& patch, std::size_t node);

/// g_ij = delta_ij + sum_alpha d_i u^alpha d_j u^alpha.
Matrix induced_metric(const Matrix& du);

/// Span of the columns of (I_n; Du).
Plane graph_plane(const Matrix& du);
Plane gauss_plane(const GraphPatch& patch, std::size_t node);

/// Position vector X = F(x) = (x, u(x)) of a node.
Vector position(const GraphPatch& patch, std::size_t node);

/// Orthonormal frames aligned with the singular directions of Du = U S V^T.
/// tangent.col(i) = (V_i, s_i U_i) / sqrt(1 + s_i^2); normal.col(a) =
/// (-s_a V_a, U_a) / sqrt(1 + s_a^2) for a < n and (0, U_a) beyond. The
/// lambdas are the Jordan-angle tangents s_i of the tangent plane against
/// P0, paired with index i. Columns of V and U are sign-normalized so the
/// largest-magnitude entry is positive; within a repeated singular value the
/// basis is whatever the deterministic Jacobi SVD returns.
struct AdaptedFrame {
  Matrix tangent;        // (n+m) x n
  Matrix normal;         // (n+m) x m
  Matrix coord_tangent;  // n x n; column i is the coordinate vector of tangent i
  std::vector<double> lambdas;
};

AdaptedFrame adapted_frame(const Matrix& du);

/// Second fundamental form components h_{alpha,ij} in an adapted frame,
/// stored once per unordered pair (i <= j).
class ShapeTensor {
 public:
  ShapeTensor() = default;
  ShapeTensor(int n, int m);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  /// Number of independent coordinates, m * n(n+1)/2.
  std::size_t dof() const noexcept { return data_.size(); }

  double operator()(int alpha, int i, int j) const { return data_[slot(alpha, i, j)]; }
  void set(int alpha, int i, int j, double value) { data_[slot(alpha, i, j)] = value; }

  /// |B|^2 = sum over alpha and ordered (i, j) of h_{alpha,ij}^2.
  double norm2() const;

  /// Raw coordinate access, slot order alpha-major then (i <= j) pairs.
  std::size_t slot(int alpha, int i, int j) const;
  double& coord(std::size_t k) { return data_[k]; }
  double coord(std::size_t k) const { return data_[k]; }
  /// (alpha, i, j) with i <= j for a slot.
  std::array<int, 3> slot_indices(std::size_t k) const;

  const AdaptedFrame* frame() const noexcept { return has_frame_ ? &frame_ : nullptr; }
  void attach_frame(AdaptedFrame frame) {
    frame_ = std::move(frame);
    has_frame_ = true;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<double> data_;
  AdaptedFrame frame_;
  bool has_frame_ = false;
};

ShapeTensor shape_tensor(const Jet& jet);
ShapeTensor shape_tensor(const GraphPatch& patch, std::size_t node);

/// |B|^2 through the coordinate frame: g^{ik} g^{jl} <B_ij, B_kl> with
/// B_ij the normal part of d_ij F. Independent of the adapted frame.
double second_fundamental_norm2_coordinate(const Jet& jet);

/// Orthogonal projector onto the normal space of the graph plane of Du.
Matrix normal_projector(const Matrix& du);

/// H = g^{ij} (d_ij F)^N.
Vector mean_curvature(const Jet& jet);
Vector mean_curvature(const GraphPatch& patch, std::size_t node);

/// Christoffel contraction xi^k = g^{ij} Gamma^k_ij with
/// Gamma^k_ij = g^{kl} <d_ij F, d_l F>. The graphical flow moves a grid
/// point with velocity H + xi^k d_k F.
Vector christoffel_drift(const Jet& jet);

}  // namespace gaussflow
