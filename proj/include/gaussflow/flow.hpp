#pragma once

// Graphical mean curvature flow d_t u = g^{ij} d_ij u with monitors: the
// composition-identity residual for the slope function v, the maximum
// principle on v, the localized test quantity phi |B|^2 e^{kv}, and the
// local curvature-estimate scaling table.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaussflow/graphgeom.hpp"
#include "gaussflow/patch.hpp"

namespace gaussflow {

enum class Scheme { Euler, RK2 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct FlowConfig {
  /// Time step; 0 selects cfl * min_spacing^2.
  double dt = 0.0;
  Scheme scheme = Scheme::Euler;
  int steps = 100;
  int monitor_every = 1;
  /// Multiplier in the test function h = k v.
  double k = 1.0;
  double v0 = 2.9;
  /// When set, nodes with sup lambda_i lambda_j > lambda0 are counted as
  /// region violations.
  std::optional<double> lambda0;
  /// Space-time cutoff window.
  double R = 1.0;
  double T = 1.0;
  double cfl = 0.2;
  std::uint64_t seed = 0;
  bool drift_correction = true;
  /// Keep per-node |F|, |B| and v at every monitored step.
  bool record_snapshots = false;

  /// Resolved time step for a patch.
  double time_step(const GraphPatch& patch) const;
  /// Throws DomainError on non-positive counts or a time step above the
  /// parabolic stability bound cfl * min_spacing^2.
  void validate(const GraphPatch& patch) const;
};

/// Pointwise velocity g^{ij} d_ij u^alpha on every node, node-major.
/// Fixed-affine boundary nodes use affinely extrapolated ghost values.
std::vector<double> graph_velocity(const GraphPatch& patch);

/// One time step. Throws DomainError if dt exceeds cfl * min_spacing^2 and
/// BlowupError on a non-finite value.
GraphPatch mcf_step(const GraphPatch& patch, double dt, Scheme scheme = Scheme::Euler,
                    double cfl = 0.2);

/// C^2 ramp equal to 1 on [0, 1/2] and 0 on [1, inf), built from the
/// quintic smoothstep, raised to the fourth power.
struct Ramp {
  static double base(double s);
  static double base_d1(double s);
  static double base_d2(double s);
  static double value(double s);
  static double d1(double s);
  static double d2(double s);
};

struct CutoffValue {
  double value = 0.0;
  double dr = 0.0;
  double drr = 0.0;
  double dt = 0.0;
};

/// Constants of the cutoff properties: |d_r eta| / eta^a <= C_a / R,
/// |d_rr eta| / eta^a <= C_a / R^2 (a = 1/2, 3/4), |d_t eta| / eta^{1/2}
/// <= C_t / T.
struct CutoffConstants {
  double c_half = 0.0;
  double c_three_quarters = 0.0;
  double c_time = 0.0;
};

/// eta(r, t) = ramp(|r| / R) * ramp(-t / T), supported on
/// [-R, R] x [-T, 0] and identically 1 on [-R/2, R/2] x [-T/2, 0].
CutoffValue cutoff_eta(double r, double t, double R, double T);
const CutoffConstants& cutoff_constants();

/// Per-node geometric quantities; NaN where the stencil is undefined.
struct GeometryField {
  std::vector<double> v;
  std::vector<double> b_norm2;
  std::vector<double> max_pair;
  std::vector<double> radius;  // |F(x)|
};

GeometryField compute_geometry(const GraphPatch& patch);

struct ResidualField {
  std::vector<double> values;  // NaN off the evaluation set
  double max_abs = 0.0;
  double l2 = 0.0;             // sqrt(sum r^2 * cell volume)
  std::size_t evaluated = 0;
};

/// Residual of (d_t - Delta) v = -sum_i Hess v(dgamma e_i, dgamma e_i) at
/// the middle state. d_t v is a central difference when both neighbours in
/// time are given, one-sided otherwise. The grid-point drift correction
/// -xi^k d_k v converts the fixed-coordinate time derivative to the normal
/// one; `drift_correction = false` omits it.
ResidualField residual_evolution_identity(const GraphPatch* prev, const GraphPatch& cur,
                                          const GraphPatch* next, double dt,
                                          bool drift_correction = true);

/// Worst value over interior nodes with sup lambda_i lambda_j <= lambda0 of
/// -(1 - lambda0)|B|^2 - [(d_t - Delta) v]_normal. Non-negative up to
/// discretization error when the differential inequality holds.
double bj_inequality_margin(const GraphPatch* prev, const GraphPatch& cur,
                            const GraphPatch* next, double dt, double lambda0);

struct LocalizedMax {
  double value = 0.0;
  std::size_t node = 0;
};

/// max over nodes of eta(|F|, t) |B|^2 e^{k v}, using config.R, T, k.
LocalizedMax localized_quantity(const GraphPatch& patch, double t, const FlowConfig& config);

struct FlowSample {
  int step = 0;
  double time = 0.0;
  double max_v = 0.0;
  double sup_b = 0.0;
  double max_f = 0.0;
  double max_phi_f = 0.0;
  double residual_l2 = 0.0;
  double residual_max = 0.0;
  std::size_t region_violations = 0;
};

struct Snapshot {
  int step = 0;
  double time = 0.0;
  std::vector<double> radius;
  std::vector<double> b_norm;
  std::vector<double> v;
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  std::vector<Snapshot> snapshots;
};

struct FlowResult {
  GraphPatch final_patch;
  FlowTrace trace;
};

/// Runs config.steps steps and monitors every config.monitor_every steps
/// (and at the last step). The cutoff time is measured relative to the final
/// time, so the run occupies [-steps*dt, 0].
FlowResult run_flow(const GraphPatch& initial, const FlowConfig& config);

struct Verdict {
  bool passed = true;
  std::optional<int> first_violation_step;
  std::string message;
};

inline constexpr double kMaxPrincipleSlack = 1e-6;

/// max v must not increase by more than 1e-6 (1 + max v) between monitored
/// steps. Fails immediately if the initial max v exceeds v0 or v0 >= 3.
Verdict monitor_max_principle(const FlowTrace& trace, double v0);

struct EstimateEntry {
  double R = 0.0;
  double T = 0.0;
  double sup_b = 0.0;
  double c_fit = 0.0;
};

struct EstimateTable {
  std::vector<EstimateEntry> entries;
  /// For each T, the max over R of c_fit.
  std::vector<double> max_over_r;
  double max_c_fit = 0.0;
  /// max / min of max_over_r; 1 when all are zero.
  double variation = 1.0;
  bool hypothesis_violated = false;
  std::string message;

  bool passed(double max_variation = 2.0) const {
    return !hypothesis_violated && variation < max_variation;
  }
};

/// c_fit = sup_{D_{R/2,T/2}} |B| / (1/R + 1/sqrt T) over a sweep, using the
/// recorded snapshots; time windows end at the last snapshot. Throws
/// DomainError when the trace is shorter than max T or has no snapshots.
EstimateTable estimate_check(const FlowTrace& trace, const std::vector<double>& R_list,
                             const std::vector<double>& T_list);

/// Parabolic rescaling F -> s F(., t / s^2) of a stored trace.
FlowTrace rescale_trace(const FlowTrace& trace, double s);

/// Max relative difference of c_fit between the trace and its rescaling by
/// s, evaluated at (s R, s^2 T). Zero up to rounding for an exact rescaling.
double rescaling_defect(const FlowTrace& trace, const std::vector<double>& R_list,
                        const std::vector<double>& T_list, double s);

}  // namespace gaussflow
