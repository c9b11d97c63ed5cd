#pragma once

// Self-shrinkers (H = -X^N / 2) and translating solitons (H = V0^N):
// residual evaluators, the drift Laplacians, pointwise checks of the
// drift inequalities for v and |B|^2, and the localized |B|^2 table.

#include <optional>
#include <string>
#include <vector>

#include "gaussflow/graphgeom.hpp"
#include "gaussflow/patch.hpp"

namespace gaussflow {

enum class SolitonKind { Shrinker, Translator };

std::string to_string(SolitonKind k);
SolitonKind soliton_kind_from_string(const std::string& s);

struct SolitonSpec {
  SolitonKind kind = SolitonKind::Translator;
  Vector V0;        // unit vector, translator only
  double k2 = 1.0;  // h2 = k2 v

  /// Throws DomainError when V0 is not a unit vector of the ambient space.
  void validate(int ambient) const;
};

/// Scalar field on the grid; NaN where undefined.
using ScalarField = std::vector<double>;

Vector shrinker_residual(const GraphPatch& patch, std::size_t node);
Vector translator_residual(const GraphPatch& patch, std::size_t node, const Vector& V0);
Vector soliton_residual(const GraphPatch& patch, std::size_t node, const SolitonSpec& spec);

/// Laplace-Beltrami operator of the induced metric.
ScalarField laplace_beltrami(const ScalarField& field, const GraphPatch& patch);
/// Ambient gradient g^{ij} d_j f d_i F at a node.
Vector ambient_gradient(const ScalarField& field, const GraphPatch& patch, std::size_t node);

/// L f = Delta f - <X, grad f> / 2.
ScalarField drift_L(const ScalarField& field, const GraphPatch& patch);
/// L_II f = Delta f + <V0, grad f>.
ScalarField drift_LII(const ScalarField& field, const GraphPatch& patch, const Vector& V0);

/// |F(x)|^2 at every node.
ScalarField radius_squared(const GraphPatch& patch);

/// Nodes at which a check is evaluated: grid margin plus an optional box in
/// x-coordinates.
struct EvaluationRegion {
  int margin = 2;
  std::optional<std::vector<double>> box_lo;
  std::optional<std::vector<double>> box_hi;

  bool contains(const GraphPatch& patch, std::size_t node) const;
};

/// Max over the region of |soliton residual|.
double soliton_residual_max(const GraphPatch& patch, const SolitonSpec& spec,
                            const EvaluationRegion& region);

struct InequalityOptions {
  EvaluationRegion region;
  /// Residual threshold above which the patch is not treated as a soliton;
  /// unset means residual_c * h_max^2.
  std::optional<double> residual_tol;
  double residual_c = 5.0;
  /// Margins pass when >= -slack_c * h_max^2.
  double slack_c = 2.0;
};

struct InequalityReport {
  double residual_max = 0.0;
  double eps_hat = 0.0;
  double slack = 0.0;
  /// min of (drift operator) v - eps_hat |B|^2.
  double worst_v_margin = 0.0;
  /// min of (drift operator)|B|^2 - (2|grad|B||^2 [+ |B|^2] - 3|B|^4).
  double worst_b_margin = 0.0;
  std::size_t evaluated = 0;
  bool v_passed = false;
  bool b_passed = false;
  bool passed() const { return v_passed && b_passed; }
};

/// Throws NotASoliton if the residual check fails.
InequalityReport check_soliton_inequalities(const GraphPatch& patch, const SolitonSpec& spec,
                                            double eps_hat, const InequalityOptions& options = {});

struct IdentityCheck {
  double defect = 0.0;     // max |(drift operator) r^2 - rhs|
  double tolerance = 0.0;  // c * h_max^2
  std::size_t evaluated = 0;
  bool passed = false;
};

/// Distance-function identities on exact solitons: L_II r^2 = 2n + 2<V0, X>
/// for translators and L r^2 = 2n - r^2 for shrinkers.
IdentityCheck check_distance_identity(const GraphPatch& patch, const SolitonSpec& spec,
                                      const EvaluationRegion& region, double c = 10.0);

/// Constant C0 of the radial ramp: -ramp'' <= C0 and |ramp'|^2 / ramp <= C0.
double ramp_constant_c0();

struct SolitonBoundRow {
  double R = 0.0;
  double sup_b2_half = 0.0;  // sup over D_{R/2} of |B|^2
  double max_f_tilde = 0.0;  // max over D_R of |B|^2 e^{k2 v} ramp(|F| / R)
  double ratio = 0.0;        // sup_b2_half / (1/R + 1/R^2)
  /// Some grid-edge node lies inside B_R(o): the patch does not cover D_R.
  bool window_truncated = false;
};

struct SolitonBoundTable {
  std::vector<SolitonBoundRow> rows;
  double c0 = 0.0;
  double max_v = 0.0;
  double max_pair = 0.0;
  bool slope_bounded = false;
  bool gauss_image_ok = false;
  std::string message;
};

/// Hypotheses: max v <= v0 and sup lambda_i lambda_j <= Lambda < sqrt 2 on
/// the patch. Failures are reported in the table, never thrown.
SolitonBoundTable localized_soliton_bound(const GraphPatch& patch, const SolitonSpec& spec,
                                          const std::vector<double>& R_list, double v0,
                                          double Lambda);

}  // namespace gaussflow
