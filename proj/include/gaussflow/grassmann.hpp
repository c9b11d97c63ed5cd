#pragma once

// Oriented n-planes in R^{n+m}: the w-pairing, Jordan angles, the slope
// function v, and membership in the convexity regions around a reference
// plane P0.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gaussflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kOrthonormalTol = 1e-12;
inline constexpr double kLambdaCap = 1e12;

/// An oriented n-dimensional subspace of R^{n+m}, stored as an
/// (n+m) x n matrix with orthonormal columns. The column order fixes the
/// orientation. Requires m >= n.
class Plane {
 public:
  /// Wraps an already-orthonormal basis. Throws DomainError when the
  /// columns are not orthonormal within kOrthonormalTol or when m < n.
  static Plane from_orthonormal(Matrix basis);

  const Matrix& basis() const noexcept { return basis_; }
  int n() const noexcept { return static_cast<int>(basis_.cols()); }
  int m() const noexcept { return static_cast<int>(basis_.rows() - basis_.cols()); }
  int ambient() const noexcept { return static_cast<int>(basis_.rows()); }

 private:
  explicit Plane(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

/// The coordinate plane spanned by the first n axes of R^{n+m}.
Plane reference_plane(int n, int m);

/// Orthonormalizes the columns of `raw` with Householder QR, flipping
/// signs so that the change of basis has positive determinant.
/// Throws DegeneratePlane on rank deficiency.
Plane orthonormalize(const Matrix& raw);

/// w(P, Q) = det W with W_ij = <e_i, f_j>. Lies in [-1, 1].
double w_pairing(const Plane& p, const Plane& q);

/// Principal-angle data between two planes, sorted by descending mu.
struct JordanSpectrum {
  std::vector<double> mus;
  std::vector<double> thetas;
  /// tan(theta); saturates at kLambdaCap when theta reaches pi/2.
  std::vector<double> lambdas;
  std::vector<bool> infinite;

  bool any_infinite() const;
  std::size_t size() const noexcept { return mus.size(); }
};

JordanSpectrum jordan_spectrum(const Plane& p, const Plane& q,
                               double lambda_cap = kLambdaCap);

/// sqrt(sum theta_i^2).
double distance(const Plane& p, const Plane& q);

/// v(P, P0) = prod sec(theta_i); +infinity when some angle is pi/2.
double slope_v(const Plane& p, const Plane& p0);

/// v as a function of a lambda profile: prod sqrt(1 + lambda_i^2).
double slope_from_lambdas(std::span<const double> lambdas);

/// sup over i != j of lambda_i lambda_j (0 when fewer than two entries).
double max_pair_product(std::span<const double> lambdas);

enum class RegionKind { U, U2, BJX, BJXLambda0, T2Lambda };

struct RegionSpec {
  RegionKind kind = RegionKind::U;
  double lambda0 = 0.5;
  double Lambda = 1.0;
};

/// Membership of P in the region around P0. Infinite lambdas never
/// belong to any region other than (possibly) U, and are never an error.
bool region_test(const Plane& p, const Plane& p0, const RegionSpec& spec);

/// Builds a plane whose Jordan angles against P0 are `thetas` (padded
/// with zeros to length n), then applies a seeded rotation of R^{n+m}
/// that preserves P0, so the angles are unchanged but the plane moves.
/// Throws DomainError if some theta is outside [0, pi/2) or there are
/// more than n angles.
Plane plane_with_angles(const Plane& p0, std::span<const double> thetas,
                        std::uint64_t seed);

/// Haar-distributed rotation in SO(k) from a seeded generator.
Matrix random_rotation(int k, std::uint64_t seed);

struct InclusionSample {
  double v = 0.0;
  double w = 0.0;
  double max_pair = 0.0;
  bool in_u2 = false;
  bool in_bjx = false;
};

/// Random planes with v < 2 tested for membership in B_JX, plus the
/// reciprocity v w = 1 and a fixed witness lambda = (1.5, 0.5) that lies in
/// B_JX but not in U2.
struct InclusionReport {
  int n = 0;
  int m = 0;
  std::vector<InclusionSample> samples;
  std::size_t violations = 0;
  double max_pair_seen = 0.0;
  double worst_reciprocity = 0.0;  // max |v w - 1|
  bool witness_in_bjx = false;
  bool witness_in_u2 = true;

  bool passed() const {
    return violations == 0 && worst_reciprocity <= 1e-10 && witness_in_bjx && !witness_in_u2;
  }
};

/// Planes are graphs of s A over P0 with A Gaussian and s uniform in (0, 1],
/// rejected until v < 2. Requires n >= 2.
InclusionReport region_inclusion_scan(int n, int m, std::size_t trials, std::uint64_t seed);

}  // namespace gaussflow
