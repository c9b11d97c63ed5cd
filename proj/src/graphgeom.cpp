#include "gaussflow/graphgeom.hpp"

#include <cmath>

#include "gaussflow/errors.hpp"

namespace gaussflow {

namespace {

void require_stencil(const GraphPatch& patch, std::size_t node, int margin) {
  if (node >= patch.node_count()) throw StencilError("node index out of range");
  if (!patch.is_interior(node, margin)) {
    throw StencilError("stencil leaves the grid at a fixed-affine boundary node");
  }
}

// Make the largest-magnitude entry of a column positive.
template <class Col>
bool needs_flip(const Col& c) {
  Eigen::Index arg = 0;
  c.cwiseAbs().maxCoeff(&arg);
  return c(arg) < 0;
}

}  // namespace

Matrix jacobian(const GraphPatch& patch, std::size_t node, DiffOrder order) {
  const int margin = order == DiffOrder::Second ? 1 : 2;
  require_stencil(patch, node, margin);
  const int n = patch.n();
  const int m = patch.m();
  Matrix du(m, n);
  for (int i = 0; i < n; ++i) {
    const double h = patch.spacing(i);
    for (int a = 0; a < m; ++a) {
      if (order == DiffOrder::Second) {
        du(a, i) = (patch.shifted(node, a, i, 1) - patch.shifted(node, a, i, -1)) / (2 * h);
      } else {
        du(a, i) = (-patch.shifted(node, a, i, 2) + 8 * patch.shifted(node, a, i, 1) -
                    8 * patch.shifted(node, a, i, -1) + patch.shifted(node, a, i, -2)) /
                   (12 * h);
      }
    }
  }
  return du;
}

Jet jet(const GraphPatch& patch, std::size_t node) {
  require_stencil(patch, node, 1);
  const int n = patch.n();
  const int m = patch.m();
  Jet out;
  out.n = n;
  out.m = m;
  out.du.resize(m, n);
  for (int a = 0; a < m; ++a) {
    auto& h2 = out.d2u[static_cast<std::size_t>(a)];
    h2.resize(n, n);
    const double u0 = patch.value(node, a);
    for (int i = 0; i < n; ++i) {
      const double hi = patch.spacing(i);
      const double up = patch.shifted(node, a, i, 1);
      const double dn = patch.shifted(node, a, i, -1);
      out.du(a, i) = (up - dn) / (2 * hi);
      h2(i, i) = (up - 2 * u0 + dn) / (hi * hi);
      for (int j = i + 1; j < n; ++j) {
        const double hj = patch.spacing(j);
        const double cross =
            (patch.shifted2(node, a, i, 1, j, 1) - patch.shifted2(node, a, i, 1, j, -1) -
             patch.shifted2(node, a, i, -1, j, 1) + patch.shifted2(node, a, i, -1, j, -1)) /
            (4 * hi * hj);
        h2(i, j) = cross;
        h2(j, i) = cross;
      }
    }
  }
  return out;
}

Matrix induced_metric(const Matrix& du) {
  const auto n = du.cols();
  return Matrix::Identity(n, n) + du.transpose() * du;
}

Plane graph_plane(const Matrix& du) {
  const auto n = du.cols();
  const auto m = du.rows();
  Matrix raw(n + m, n);
  raw.topRows(n) = Matrix::Identity(n, n);
  raw.bottomRows(m) = du;
  return orthonormalize(raw);
}

Plane gauss_plane(const GraphPatch& patch, std::size_t node) {
  return graph_plane(jacobian(patch, node));
}

Vector position(const GraphPatch& patch, std::size_t node) {
  const int n = patch.n();
  const int m = patch.m();
  Vector x(n + m);
  for (int i = 0; i < n; ++i) x(i) = patch.coord(node, i);
  for (int a = 0; a < m; ++a) x(n + a) = patch.value(node, a);
  return x;
}

AdaptedFrame adapted_frame(const Matrix& du) {
  const auto m = du.rows();
  const auto n = du.cols();
  if (m < n) throw DimensionError("adapted frame requires m >= n");
  Eigen::JacobiSVD<Matrix> svd(du, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  const Vector s = svd.singularValues();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (needs_flip(v.col(i))) {
      v.col(i) = -v.col(i);
      u.col(i) = -u.col(i);
    }
  }
  for (Eigen::Index a = n; a < m; ++a) {
    if (needs_flip(u.col(a))) u.col(a) = -u.col(a);
  }

  AdaptedFrame f;
  f.tangent = Matrix::Zero(n + m, n);
  f.normal = Matrix::Zero(n + m, m);
  f.coord_tangent = Matrix::Zero(n, n);
  f.lambdas.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = s(i);
    const double c = 1.0 / std::sqrt(1.0 + si * si);
    f.lambdas[static_cast<std::size_t>(i)] = si;
    f.coord_tangent.col(i) = c * v.col(i);
    f.tangent.col(i).head(n) = c * v.col(i);
    f.tangent.col(i).tail(m) = c * si * u.col(i);
    f.normal.col(i).head(n) = -c * si * v.col(i);
    f.normal.col(i).tail(m) = c * u.col(i);
  }
  for (Eigen::Index a = n; a < m; ++a) f.normal.col(a).tail(m) = u.col(a);
  return f;
}

ShapeTensor::ShapeTensor(int n, int m)
    : n_(n),
      m_(m),
      data_(static_cast<std::size_t>(m) * static_cast<std::size_t>(n * (n + 1) / 2), 0.0) {
  if (n < 1 || m < 1) throw DimensionError("shape tensor needs n, m >= 1");
}

std::size_t ShapeTensor::slot(int alpha, int i, int j) const {
  if (i > j) std::swap(i, j);
  const int pairs = n_ * (n_ + 1) / 2;
  // Row-major upper triangle: pairs before row i, then offset j - i.
  const int before = i * n_ - i * (i - 1) / 2;
  return static_cast<std::size_t>(alpha * pairs + before + (j - i));
}

std::array<int, 3> ShapeTensor::slot_indices(std::size_t k) const {
  const int pairs = n_ * (n_ + 1) / 2;
  const int alpha = static_cast<int>(k) / pairs;
  int rem = static_cast<int>(k) % pairs;
  int i = 0;
  while (rem >= n_ - i) {
    rem -= n_ - i;
    ++i;
  }
  return {alpha, i, i + rem};
}

double ShapeTensor::norm2() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    const auto [a, i, j] = slot_indices(k);
    const double w = i == j ? 1.0 : 2.0;
    sum += w * data_[k] * data_[k];
  }
  return sum;
}

ShapeTensor shape_tensor(const Jet& jt) {
  const int n = jt.n;
  const int m = jt.m;
  const Matrix du = jt.du;
  AdaptedFrame frame = adapted_frame(du);
  ShapeTensor h(n, m);
  // Normal components of (0, d_kl u) along nu_alpha only see the last m
  // entries of the normal.
  for (int alpha = 0; alpha < m; ++alpha) {
    const auto nu = frame.normal.col(alpha).tail(m);
    Matrix q = Matrix::Zero(n, n);  // q_kl = <nu_alpha, d_kl F>
    for (int beta = 0; beta < m; ++beta) {
      const double w = nu(beta);
      if (w != 0.0) q += w * Matrix(jt.d2u[static_cast<std::size_t>(beta)]);
    }
    const Matrix hij = frame.coord_tangent.transpose() * q * frame.coord_tangent;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) h.set(alpha, i, j, 0.5 * (hij(i, j) + hij(j, i)));
  }
  h.attach_frame(std::move(frame));
  return h;
}

ShapeTensor shape_tensor(const GraphPatch& patch, std::size_t node) {
  return shape_tensor(jet(patch, node));
}

Matrix normal_projector(const Matrix& du) {
  const auto n = du.cols();
  const auto m = du.rows();
  Matrix t(n + m, n);
  t.topRows(n) = Matrix::Identity(n, n);
  t.bottomRows(m) = du;
  const Matrix g = induced_metric(du);
  return Matrix::Identity(n + m, n + m) - t * g.llt().solve(t.transpose());
}

namespace {
Vector second_derivative_vector(const Jet& jt, int i, int j) {
  Vector d = Vector::Zero(jt.n + jt.m);
  for (int a = 0; a < jt.m; ++a) d(jt.n + a) = jt.d2u[static_cast<std::size_t>(a)](i, j);
  return d;
}
}  // namespace

double second_fundamental_norm2_coordinate(const Jet& jt) {
  const int n = jt.n;
  const Matrix du = jt.du;
  const Matrix pn = normal_projector(du);
  const Matrix ginv = induced_metric(du).inverse();
  std::vector<Vector> b(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b[static_cast<std::size_t>(i * n + j)] = pn * second_derivative_vector(jt, i, j);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          sum += ginv(i, k) * ginv(j, l) *
                 b[static_cast<std::size_t>(i * n + j)].dot(b[static_cast<std::size_t>(k * n + l)]);
  return sum;
}

Vector mean_curvature(const Jet& jt) {
  const int n = jt.n;
  const Matrix du = jt.du;
  const Matrix ginv = induced_metric(du).inverse();
  Vector acc = Vector::Zero(jt.n + jt.m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += ginv(i, j) * second_derivative_vector(jt, i, j);
  return normal_projector(du) * acc;
}

Vector mean_curvature(const GraphPatch& patch, std::size_t node) {
  return mean_curvature(jet(patch, node));
}

Vector christoffel_drift(const Jet& jt) {
  const int n = jt.n;
  const int m = jt.m;
  const Matrix du = jt.du;
  const Matrix ginv = induced_metric(du).inverse();
  // c_l = g^{ij} <d_ij F, d_l F> = sum_alpha (g^{ij} d_ij u^alpha) d_l u^alpha
  Vector lap = Vector::Zero(m);
  for (int a = 0; a < m; ++a) {
    const auto& h2 = jt.d2u[static_cast<std::size_t>(a)];
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += ginv(i, j) * h2(i, j);
    lap(a) = s;
  }
  const Vector c = du.transpose() * lap;
  return ginv * c;
}

}  // namespace gaussflow
