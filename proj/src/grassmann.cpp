#include "gaussflow/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "gaussflow/errors.hpp"

namespace gaussflow {

namespace {

void require_compatible(const Plane& p, const Plane& q) {
  if (p.ambient() != q.ambient() || p.n() != q.n()) {
    std::ostringstream os;
    os << "plane dimension mismatch: (" << p.n() << " in R^" << p.ambient()
       << ") vs (" << q.n() << " in R^" << q.ambient() << ")";
    throw DimensionError(os.str());
  }
}

// Complete an orthonormal basis of P to one of R^{n+m}; the last m columns
// span the orthogonal complement.
Matrix complete_basis(const Plane& p) {
  Eigen::HouseholderQR<Matrix> qr(p.basis());
  Matrix full = qr.householderQ() * Matrix::Identity(p.ambient(), p.ambient());
  full.leftCols(p.n()) = p.basis();
  return full;
}

}  // namespace

Plane Plane::from_orthonormal(Matrix basis) {
  if (basis.cols() == 0 || basis.rows() < 2 * basis.cols()) {
    throw DomainError("plane requires n >= 1 and codimension m >= n");
  }
  const Matrix gram = basis.transpose() * basis;
  const double err =
      (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
  if (err > kOrthonormalTol) {
    throw DomainError("basis columns are not orthonormal");
  }
  return Plane(std::move(basis));
}

Plane reference_plane(int n, int m) {
  if (n < 1 || m < n) throw DomainError("reference plane requires 1 <= n <= m");
  return Plane::from_orthonormal(Matrix::Identity(n + m, n));
}

Plane orthonormalize(const Matrix& raw) {
  const auto n = raw.cols();
  if (n == 0 || raw.rows() < 2 * n) {
    throw DimensionError("raw basis must be (n+m) x n with m >= n");
  }
  Eigen::HouseholderQR<Matrix> qr(raw);
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const double scale = raw.colwise().norm().maxCoeff();
  Matrix q = qr.householderQ() * Matrix::Identity(raw.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(std::abs(r(i, i)) > 1e-12 * scale)) {
      throw DegeneratePlane("input columns are rank deficient");
    }
    // raw = Q R; flipping both Q column i and R row i keeps the product and
    // makes R's diagonal positive, so span and orientation are preserved.
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  }
  // One Gram-Schmidt sweep removes residual round-off.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) q.col(i) -= q.col(j).dot(q.col(i)) * q.col(j);
    q.col(i).normalize();
  }
  return Plane::from_orthonormal(std::move(q));
}

double w_pairing(const Plane& p, const Plane& q) {
  require_compatible(p, q);
  const Matrix w = p.basis().transpose() * q.basis();
  return std::clamp(w.partialPivLu().determinant(), -1.0, 1.0);
}

bool JordanSpectrum::any_infinite() const {
  return std::any_of(infinite.begin(), infinite.end(), [](bool b) { return b; });
}

JordanSpectrum jordan_spectrum(const Plane& p, const Plane& q, double lambda_cap) {
  require_compatible(p, q);
  const Matrix w = p.basis().transpose() * q.basis();
  Eigen::JacobiSVD<Matrix> svd(w);
  Vector sv = svd.singularValues();  // descending

  JordanSpectrum out;
  const auto n = static_cast<std::size_t>(sv.size());
  out.mus.resize(n);
  out.thetas.resize(n);
  out.lambdas.resize(n);
  out.infinite.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = std::clamp(sv(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    out.mus[i] = mu;
    out.thetas[i] = std::acos(mu);
    // tan(arccos mu) = sqrt(1 - mu^2) / mu, evaluated via the angle's sine
    // for accuracy near mu = 1.
    const double s = std::sin(out.thetas[i]);
    if (mu * lambda_cap <= s) {
      out.lambdas[i] = lambda_cap;
      out.infinite[i] = true;
    } else {
      out.lambdas[i] = s / mu;
    }
  }
  return out;
}

double distance(const Plane& p, const Plane& q) {
  const auto spec = jordan_spectrum(p, q);
  double sum = 0.0;
  for (double t : spec.thetas) sum += t * t;
  return std::sqrt(sum);
}

double slope_v(const Plane& p, const Plane& p0) {
  const auto spec = jordan_spectrum(p, p0);
  double v = 1.0;
  for (double mu : spec.mus) {
    if (mu <= 0.0) return std::numeric_limits<double>::infinity();
    v /= mu;
  }
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

double slope_from_lambdas(std::span<const double> lambdas) {
  double v = 1.0;
  for (double l : lambdas) v *= std::sqrt(1.0 + l * l);
  return v;
}

double max_pair_product(std::span<const double> lambdas) {
  double best = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (std::size_t j = i + 1; j < lambdas.size(); ++j) {
      best = std::max(best, lambdas[i] * lambdas[j]);
    }
  }
  return best;
}

bool region_test(const Plane& p, const Plane& p0, const RegionSpec& spec) {
  const double w = w_pairing(p, p0);
  if (!(w > 0.0)) return false;
  if (spec.kind == RegionKind::U) return true;

  const auto js = jordan_spectrum(p, p0);
  if (js.any_infinite()) return false;
  const double sup = max_pair_product(js.lambdas);
  switch (spec.kind) {
    case RegionKind::U2:
      return slope_from_lambdas(js.lambdas) < 2.0;
    case RegionKind::BJX:
      return sup < 1.0;
    case RegionKind::BJXLambda0:
      return sup <= spec.lambda0;
    case RegionKind::T2Lambda:
      return sup <= spec.Lambda;
    case RegionKind::U:
      break;
  }
  return true;
}

Matrix random_rotation(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(k, k);
  const Matrix r = qr.matrixQR();
  for (int i = 0; i < k; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

Plane plane_with_angles(const Plane& p0, std::span<const double> thetas,
                        std::uint64_t seed) {
  const int n = p0.n();
  const int m = p0.m();
  if (static_cast<int>(thetas.size()) > n) {
    throw DomainError("more Jordan angles than the plane dimension");
  }
  for (double t : thetas) {
    if (!(t >= 0.0 && t < std::numbers::pi / 2)) {
      throw DomainError("Jordan angles must lie in [0, pi/2)");
    }
  }
  const Matrix full = complete_basis(p0);
  const auto tangent = full.leftCols(n);
  const auto normal = full.rightCols(m);

  Matrix basis = tangent;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    basis.col(k) = std::cos(thetas[i]) * tangent.col(k) + std::sin(thetas[i]) * normal.col(k);
  }

  // Rotate the tangent and normal blocks of P0 independently: such maps fix
  // P0 and hence every Jordan angle against it.
  Matrix block = Matrix::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = random_rotation(n, seed);
  block.bottomRightCorner(m, m) = random_rotation(m, seed ^ 0x9e3779b97f4a7c15ULL);
  const Matrix iso = full * block * full.transpose();
  return orthonormalize(iso * basis);
}

InclusionReport region_inclusion_scan(int n, int m, std::size_t trials, std::uint64_t seed) {
  if (n < 2) throw DomainError("region inclusion needs n >= 2");
  InclusionReport rep;
  rep.n = n;
  rep.m = m;
  const Plane p0 = reference_plane(n, m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.0, 1.0);
  const RegionSpec u2{RegionKind::U2};
  const RegionSpec bjx{RegionKind::BJX};
  Matrix raw(n + m, n);
  while (rep.samples.size() < trials) {
    raw.topRows(n).setIdentity();
    const double s = 1.0 - scale(rng);
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < m; ++a) raw(n + a, j) = s * gauss(rng);
    const Plane p = orthonormalize(raw);
    const double v = slope_v(p, p0);
    if (!(v < 2.0)) continue;
    InclusionSample smp;
    smp.v = v;
    smp.w = w_pairing(p, p0);
    smp.max_pair = max_pair_product(jordan_spectrum(p, p0).lambdas);
    smp.in_u2 = region_test(p, p0, u2);
    smp.in_bjx = region_test(p, p0, bjx);
    if (smp.in_u2 && !smp.in_bjx) ++rep.violations;
    rep.max_pair_seen = std::max(rep.max_pair_seen, smp.max_pair);
    rep.worst_reciprocity = std::max(rep.worst_reciprocity, std::abs(smp.v * smp.w - 1.0));
    rep.samples.push_back(smp);
  }
  const double witness[2] = {std::atan(1.5), std::atan(0.5)};
  const Plane q = plane_with_angles(p0, witness, seed);
  rep.witness_in_bjx = region_test(q, p0, bjx);
  rep.witness_in_u2 = region_test(q, p0, u2);
  return rep;
}

}  // namespace gaussflow
