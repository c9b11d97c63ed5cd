#include "gaussflow/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gaussflow/errors.hpp"
#include "gaussflow/flow.hpp"
#include "gaussflow/parallel.hpp"

namespace gaussflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat index of the node displaced by `off` along `axis`; assumes the
// displaced node exists (periodic wrap or interior margin checked).
std::size_t displaced(const GraphPatch& patch, std::size_t node, int axis, int off) {
  const int g = patch.grid()[static_cast<std::size_t>(axis)];
  const int i = patch.index(node, axis);
  const int j = ((i + off) % g + g) % g;
  const auto stride = static_cast<std::ptrdiff_t>(patch.stride(axis));
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + (j - i) * stride);
}

struct FieldJet {
  SmallVector d1;
  SmallMatrix d2;
};

// Central differences of a scalar field; nullopt if any stencil value is
// missing.
std::optional<FieldJet> field_jet(const ScalarField& f, const GraphPatch& patch,
                                  std::size_t node) {
  if (!patch.is_interior(node, 1)) return std::nullopt;
  const int n = patch.n();
  FieldJet fj;
  fj.d1.resize(n);
  fj.d2.resize(n, n);
  const double f0 = f[node];
  if (!std::isfinite(f0)) return std::nullopt;
  for (int i = 0; i < n; ++i) {
    const double h = patch.spacing(i);
    const double fp = f[displaced(patch, node, i, 1)];
    const double fm = f[displaced(patch, node, i, -1)];
    if (!std::isfinite(fp) || !std::isfinite(fm)) return std::nullopt;
    fj.d1(i) = (fp - fm) / (2.0 * h);
    fj.d2(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int j = 0; j < i; ++j) {
      const double hj = patch.spacing(j);
      const std::size_t ip = displaced(patch, node, i, 1);
      const std::size_t im = displaced(patch, node, i, -1);
      const double fpp = f[displaced(patch, ip, j, 1)];
      const double fpm = f[displaced(patch, ip, j, -1)];
      const double fmp = f[displaced(patch, im, j, 1)];
      const double fmm = f[displaced(patch, im, j, -1)];
      if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) ||
          !std::isfinite(fmm)) {
        return std::nullopt;
      }
      const double c = (fpp - fpm - fmp + fmm) / (4.0 * h * hj);
      fj.d2(i, j) = c;
      fj.d2(j, i) = c;
    }
  }
  return fj;
}

struct NodeGeometry {
  SmallMatrix ginv;
  SmallMatrix tangents;  // (n+m) x n, column i = d_i F
  SmallVector xi;
};

NodeGeometry node_geometry(const Jet& jt) {
  const int n = jt.n;
  const int m = jt.m;
  NodeGeometry g;
  SmallMatrix metric = SmallMatrix::Identity(n, n) + jt.du.transpose() * jt.du;
  g.ginv = metric.inverse();
  g.tangents.resize(n + m, n);
  g.tangents.topRows(n).setIdentity();
  g.tangents.bottomRows(m) = jt.du;
  g.xi = christoffel_drift(jt);
  return g;
}

double laplacian_at(const NodeGeometry& g, const FieldJet& fj) {
  return (g.ginv.cwiseProduct(fj.d2)).sum() - g.xi.dot(fj.d1);
}

SmallVector gradient_at(const NodeGeometry& g, const FieldJet& fj) {
  return g.tangents * (g.ginv * fj.d1);
}

// Applies op(geometry, field jet, node) wherever the stencil is defined.
template <typename Op>
ScalarField apply_operator(const ScalarField& field, const GraphPatch& patch, Op op) {
  if (field.size() != patch.node_count()) throw DimensionError("field size must match the patch");
  ScalarField out(patch.node_count(), kNaN);
  parallel_for(patch.node_count(), [&](std::size_t node) {
    const auto fj = field_jet(field, patch, node);
    if (!fj) return;
    const NodeGeometry g = node_geometry(jet(patch, node));
    out[node] = op(g, *fj, node);
  });
  return out;
}

double hmax(const GraphPatch& patch) {
  double h = 0.0;
  for (int i = 0; i < patch.n(); ++i) h = std::max(h, patch.spacing(i));
  return h;
}

}  // namespace

std::string to_string(SolitonKind k) {
  return k == SolitonKind::Shrinker ? "shrinker" : "translator";
}

SolitonKind soliton_kind_from_string(const std::string& s) {
  if (s == "shrinker") return SolitonKind::Shrinker;
  if (s == "translator") return SolitonKind::Translator;
  throw DomainError("unknown soliton kind: " + s);
}

void SolitonSpec::validate(int ambient) const {
  if (kind == SolitonKind::Shrinker) return;
  if (V0.size() != ambient) throw DimensionError("V0 must have n + m entries");
  if (std::abs(V0.norm() - 1.0) > 1e-12) throw DomainError("V0 must be a unit vector");
}

Vector shrinker_residual(const GraphPatch& patch, std::size_t node) {
  const Jet jt = jet(patch, node);
  const Matrix du = jt.du;
  return mean_curvature(jt) + 0.5 * normal_projector(du) * position(patch, node);
}

Vector translator_residual(const GraphPatch& patch, std::size_t node, const Vector& V0) {
  if (V0.size() != patch.n() + patch.m()) throw DimensionError("V0 must have n + m entries");
  const Jet jt = jet(patch, node);
  const Matrix du = jt.du;
  return mean_curvature(jt) - normal_projector(du) * V0;
}

Vector soliton_residual(const GraphPatch& patch, std::size_t node, const SolitonSpec& spec) {
  return spec.kind == SolitonKind::Shrinker ? shrinker_residual(patch, node)
                                            : translator_residual(patch, node, spec.V0);
}

ScalarField laplace_beltrami(const ScalarField& field, const GraphPatch& patch) {
  return apply_operator(field, patch, [](const NodeGeometry& g, const FieldJet& fj, std::size_t) {
    return laplacian_at(g, fj);
  });
}

Vector ambient_gradient(const ScalarField& field, const GraphPatch& patch, std::size_t node) {
  const auto fj = field_jet(field, patch, node);
  if (!fj) throw StencilError("gradient stencil leaves the grid or meets an undefined value");
  return gradient_at(node_geometry(jet(patch, node)), *fj);
}

ScalarField drift_L(const ScalarField& field, const GraphPatch& patch) {
  return apply_operator(field, patch,
                        [&](const NodeGeometry& g, const FieldJet& fj, std::size_t node) {
                          const Vector X = position(patch, node);
                          return laplacian_at(g, fj) - 0.5 * X.dot(gradient_at(g, fj));
                        });
}

ScalarField drift_LII(const ScalarField& field, const GraphPatch& patch, const Vector& V0) {
  if (V0.size() != patch.n() + patch.m()) throw DimensionError("V0 must have n + m entries");
  return apply_operator(field, patch, [&](const NodeGeometry& g, const FieldJet& fj, std::size_t) {
    return laplacian_at(g, fj) + V0.dot(gradient_at(g, fj));
  });
}

ScalarField radius_squared(const GraphPatch& patch) {
  ScalarField r2(patch.node_count());
  for (std::size_t node = 0; node < r2.size(); ++node) r2[node] = position(patch, node).squaredNorm();
  return r2;
}

bool EvaluationRegion::contains(const GraphPatch& patch, std::size_t node) const {
  if (!patch.is_interior(node, margin)) return false;
  for (int i = 0; i < patch.n(); ++i) {
    const double x = patch.coord(node, i);
    const auto ui = static_cast<std::size_t>(i);
    if (box_lo && x < (*box_lo)[ui]) return false;
    if (box_hi && x > (*box_hi)[ui]) return false;
  }
  return true;
}

double soliton_residual_max(const GraphPatch& patch, const SolitonSpec& spec,
                            const EvaluationRegion& region) {
  spec.validate(patch.n() + patch.m());
  std::vector<double> res(patch.node_count(), 0.0);
  parallel_for(patch.node_count(), [&](std::size_t node) {
    if (!region.contains(patch, node)) return;
    res[node] = soliton_residual(patch, node, spec).cwiseAbs().maxCoeff();
  });
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, r);
  return worst;
}

InequalityReport check_soliton_inequalities(const GraphPatch& patch, const SolitonSpec& spec,
                                            double eps_hat, const InequalityOptions& options) {
  spec.validate(patch.n() + patch.m());
  const double h2 = hmax(patch) * hmax(patch);
  InequalityReport rep;
  rep.eps_hat = eps_hat;
  rep.slack = options.slack_c * h2;
  rep.residual_max = soliton_residual_max(patch, spec, options.region);
  const double tol = options.residual_tol.value_or(options.residual_c * h2);
  if (!(rep.residual_max <= tol)) {
    throw NotASoliton("soliton residual " + std::to_string(rep.residual_max) +
                          " exceeds threshold " + std::to_string(tol),
                      rep.residual_max);
  }

  const GeometryField geo = compute_geometry(patch);
  ScalarField b_norm(geo.b_norm2.size());
  for (std::size_t k = 0; k < b_norm.size(); ++k) b_norm[k] = std::sqrt(geo.b_norm2[k]);

  const bool shrinker = spec.kind == SolitonKind::Shrinker;
  auto drift = [&](const ScalarField& f) {
    return shrinker ? drift_L(f, patch) : drift_LII(f, patch, spec.V0);
  };
  const ScalarField lv = drift(geo.v);
  const ScalarField lb = drift(geo.b_norm2);

  rep.worst_v_margin = kInf;
  rep.worst_b_margin = kInf;
  for (std::size_t node = 0; node < patch.node_count(); ++node) {
    if (!options.region.contains(patch, node)) continue;
    if (!std::isfinite(lv[node]) || !std::isfinite(lb[node])) continue;
    const auto fj = field_jet(b_norm, patch, node);
    if (!fj) continue;
    const NodeGeometry g = node_geometry(jet(patch, node));
    const double grad2 = fj->d1.dot(g.ginv * fj->d1);
    const double b2 = geo.b_norm2[node];
    double rhs = 2.0 * grad2 - 3.0 * b2 * b2;
    if (shrinker) rhs += b2;
    rep.worst_v_margin = std::min(rep.worst_v_margin, lv[node] - eps_hat * b2);
    rep.worst_b_margin = std::min(rep.worst_b_margin, lb[node] - rhs);
    ++rep.evaluated;
  }
  if (rep.evaluated == 0) throw DomainError("no evaluable node in the inequality region");
  rep.v_passed = rep.worst_v_margin >= -rep.slack;
  rep.b_passed = rep.worst_b_margin >= -rep.slack;
  return rep;
}

IdentityCheck check_distance_identity(const GraphPatch& patch, const SolitonSpec& spec,
                                      const EvaluationRegion& region, double c) {
  spec.validate(patch.n() + patch.m());
  const ScalarField r2 = radius_squared(patch);
  const bool shrinker = spec.kind == SolitonKind::Shrinker;
  const ScalarField lr = shrinker ? drift_L(r2, patch) : drift_LII(r2, patch, spec.V0);
  const double n2 = 2.0 * patch.n();
  IdentityCheck chk;
  chk.tolerance = c * hmax(patch) * hmax(patch);
  for (std::size_t node = 0; node < patch.node_count(); ++node) {
    if (!region.contains(patch, node) || !std::isfinite(lr[node])) continue;
    const double rhs =
        shrinker ? n2 - r2[node] : n2 + 2.0 * spec.V0.dot(position(patch, node));
    chk.defect = std::max(chk.defect, std::abs(lr[node] - rhs));
    ++chk.evaluated;
  }
  if (chk.evaluated == 0) throw DomainError("no evaluable node in the identity region");
  chk.passed = chk.defect <= chk.tolerance;
  return chk;
}

double ramp_constant_c0() {
  static const double c0 = [] {
    constexpr int kSamples = 200000;
    double worst = 0.0;
    for (int k = 0; k <= kSamples; ++k) {
      const double s = static_cast<double>(k) / kSamples;
      worst = std::max(worst, -Ramp::d2(s));
      const double val = Ramp::value(s);
      if (val > 0.0) worst = std::max(worst, Ramp::d1(s) * Ramp::d1(s) / val);
    }
    return 1.02 * worst;
  }();
  return c0;
}

SolitonBoundTable localized_soliton_bound(const GraphPatch& patch, const SolitonSpec& spec,
                                          const std::vector<double>& R_list, double v0,
                                          double Lambda) {
  spec.validate(patch.n() + patch.m());
  SolitonBoundTable table;
  table.c0 = ramp_constant_c0();
  const GeometryField geo = compute_geometry(patch);
  for (std::size_t k = 0; k < geo.v.size(); ++k) {
    if (!std::isfinite(geo.v[k])) continue;
    table.max_v = std::max(table.max_v, geo.v[k]);
    table.max_pair = std::max(table.max_pair, geo.max_pair[k]);
  }
  table.slope_bounded = table.max_v <= v0;
  table.gauss_image_ok = Lambda < std::sqrt(2.0) && table.max_pair <= Lambda;
  if (!table.slope_bounded) table.message += "slope exceeds v0; ";
  if (!table.gauss_image_ok) table.message += "Gauss image leaves the region sup lambda_i lambda_j <= Lambda < sqrt 2; ";

  for (double R : R_list) {
    if (!(R > 0.0)) throw DomainError("window radius must be positive");
    SolitonBoundRow row;
    row.R = R;
    for (std::size_t node = 0; node < patch.node_count(); ++node) {
      const double r = geo.radius[node];
      if (r > R) continue;
      if (!patch.is_interior(node, 1)) {
        row.window_truncated = true;
        continue;
      }
      const double b2 = geo.b_norm2[node];
      if (r <= 0.5 * R) row.sup_b2_half = std::max(row.sup_b2_half, b2);
      row.max_f_tilde =
          std::max(row.max_f_tilde, b2 * std::exp(spec.k2 * geo.v[node]) * Ramp::value(r / R));
    }
    row.ratio = row.sup_b2_half / (1.0 / R + 1.0 / (R * R));
    if (row.window_truncated) {
      table.message += "window R=" + std::to_string(R) + " not covered by the patch; ";
    }
    table.rows.push_back(row);
  }
  if (!table.message.empty()) table.message.resize(table.message.size() - 2);
  return table;
}

}  // namespace gaussflow
