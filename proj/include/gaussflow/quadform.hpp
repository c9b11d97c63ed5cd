#pragma once

// Hessian quadratic forms of log v and v on the Grassmannian, pulled back
// along the Gauss map, and a minimum-eigenvalue oracle that certifies their
// lower bounds over families of Jordan-angle profiles.
//
// Index convention: in a ShapeTensor h_{alpha,ij}, normal indices
// alpha < n are paired with the tangent index of the same number (and with
// lambda_alpha); normal indices alpha >= n are the unpaired directions.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gaussflow/graphgeom.hpp"

namespace gaussflow {

inline constexpr int kOracleDimCap = 6;

struct LambdaProfile {
  int n = 0;
  int m = 0;
  std::vector<double> lambdas;

  /// Throws DomainError on non-finite or negative entries, DimensionError on
  /// a size mismatch or m < n.
  void validate() const;
};

enum class Form { LogV, V };

struct Dims {
  int n = 0;
  int m = 0;
};

/// Closed-form expansion of sum_i Hess(log v)(dgamma e_i, dgamma e_i).
double q_logv(const LambdaProfile& profile, const ShapeTensor& h);

/// Same quantity by contracting g + sum lambda_j^2 w_jj^2 +
/// sum_{i != j} lambda_i lambda_j w_ij (x) w_ji against dgamma(e_i), with
/// w_jk(dgamma e_i) = h_{k,ij}.
double q_logv_via_coframe(const LambdaProfile& profile, const ShapeTensor& h);

/// sum_i Hess(v)(dgamma e_i, dgamma e_i) through Hess v = v (Hess log v +
/// dlog v (x) dlog v), with dlog v = sum_j lambda_j w_jj.
double q_v(const LambdaProfile& profile, const ShapeTensor& h);

double evaluate_form(Form form, const LambdaProfile& profile, const ShapeTensor& h);

/// Symmetric matrix of the form in orthonormal ShapeTensor coordinates:
/// off-diagonal (i < j) slots carry a sqrt(2) weight so that |B|^2 is the
/// identity form.
Matrix form_matrix(const LambdaProfile& profile, Form form);

/// inf over |h| = 1 of Q(h). Throws CapError when n or m exceeds 6.
double rayleigh_min(const LambdaProfile& profile, Form form);

struct DimsResult {
  Dims dims;
  std::size_t samples = 0;
  double min_rayleigh = 0.0;
  LambdaProfile worst_profile;
};

struct BoundReport {
  std::string label;
  double threshold = 0.0;
  std::size_t samples = 0;
  double min_rayleigh = 0.0;
  double claimed_bound = 0.0;
  /// min_rayleigh - claimed_bound, kept even when negative.
  double margin = 0.0;
  LambdaProfile worst_profile;
  bool passed = false;
  std::vector<DimsResult> by_dims;
};

inline constexpr double kCertifyTolerance = 1e-9;

/// Minimum of rayleigh_min(log v) over profiles with sup lambda_i lambda_j
/// <= lambda0; passes iff it is at least 1 - lambda0 - 1e-9.
/// Requires lambda0 in (0, 1).
BoundReport certify_bj14(double lambda0, std::size_t trials, std::span<const Dims> dims,
                         std::uint64_t seed);

/// Numerical epsilon_0: minimum of rayleigh_min(v) over profiles with
/// v(lambda) <= v0. Passes iff positive. Requires v0 >= 1.
BoundReport estimate_eps0(double v0, std::size_t trials, std::span<const Dims> dims,
                          std::uint64_t seed);

/// Minimum of rayleigh_min(log v) over profiles with sup lambda_i lambda_j
/// <= Lambda. The claimed bound is 1 - Lambda for Lambda <= 1 and 0 above.
/// Requires Lambda in (0, sqrt 2).
BoundReport estimate_eps_T2(double Lambda, std::size_t trials, std::span<const Dims> dims,
                            std::uint64_t seed);

enum class Constraint { PairProduct, Slope };

/// Admissible profiles for the scans: deterministic boundary-saturating
/// profiles first, then seeded draws, uniform per coordinate on [0, cap],
/// alternately kept when admissible (rejection) or scaled onto the
/// constraint boundary.
std::vector<LambdaProfile> sample_profiles(Constraint constraint, double threshold, Dims dims,
                                           std::size_t count, std::uint64_t seed);

}  // namespace gaussflow
