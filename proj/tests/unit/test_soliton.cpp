#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gaussflow/errors.hpp"
#include "gaussflow/flow.hpp"
#include "gaussflow/recipes.hpp"
#include "gaussflow/soliton.hpp"

using namespace gaussflow;

namespace {

constexpr double kPi = std::numbers::pi;

SolitonSpec translator(const Vector& v0) { return SolitonSpec{SolitonKind::Translator, v0, 1.0}; }
SolitonSpec shrinker() { return SolitonSpec{SolitonKind::Shrinker, Vector(), 1.0}; }

EvaluationRegion box(double a1, double a_other, int n = 2) {
  EvaluationRegion r;
  std::vector<double> lo(static_cast<std::size_t>(n), -a_other), hi(static_cast<std::size_t>(n), a_other);
  lo[0] = -a1;
  hi[0] = a1;
  r.box_lo = lo;
  r.box_hi = hi;
  return r;
}

GraphPatch plane_through_origin() {
  Matrix a(2, 2);
  a << 0.5, 0.0, -0.25, 0.75;
  return recipes::affine(a, Vector::Zero(2), {-1, -1}, {1, 1}, {11, 11}, Boundary::FixedAffine);
}

// A unit vector tangent to plane_through_origin.
Vector tangent_direction() {
  Vector t(4);
  t << 1.0, 1.0, 0.5, 0.5;
  return t.normalized();
}

double finite_max_abs(const ScalarField& f, const ScalarField& ref) {
  double worst = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (std::isfinite(f[k])) worst = std::max(worst, std::abs(f[k] - ref[k]));
  return worst;
}

std::size_t finite_count(const ScalarField& f) {
  std::size_t c = 0;
  for (double v : f) c += std::isfinite(v) ? 1 : 0;
  return c;
}

}  // namespace

TEST(SolitonSpec, Validation) {
  Vector v(4);
  v << 0, 0, 1, 0;
  EXPECT_NO_THROW(translator(v).validate(4));
  EXPECT_THROW(translator(v).validate(5), DimensionError);
  EXPECT_THROW(translator(2.0 * v).validate(4), DomainError);
  EXPECT_NO_THROW(shrinker().validate(4));
  EXPECT_EQ(soliton_kind_from_string("shrinker"), SolitonKind::Shrinker);
  EXPECT_THROW(soliton_kind_from_string("expander"), DomainError);
}

TEST(Residual, AffineThroughOriginVanishes) {
  const GraphPatch p = plane_through_origin();
  const EvaluationRegion all;
  EXPECT_LE(soliton_residual_max(p, shrinker(), all), 1e-12);
  EXPECT_LE(soliton_residual_max(p, translator(tangent_direction()), all), 1e-12);
}

TEST(Residual, ShrinkerOffsetPlane) {
  const double d = 0.8;
  Vector b(2);
  b << d, 0.0;
  const GraphPatch p = recipes::affine(Matrix::Zero(2, 2), b, {-1, -1}, {1, 1}, {9, 9}, Boundary::FixedAffine);
  const std::size_t node = p.nearest_node(std::vector<double>{0.25, -0.5});
  EXPECT_NEAR(shrinker_residual(p, node).norm(), d / 2, 1e-15);
}

TEST(Residual, TranslatorRejectsWrongSize) {
  const GraphPatch p = plane_through_origin();
  EXPECT_THROW(translator_residual(p, 60, Vector::Zero(3)), DimensionError);
}

TEST(Residual, GrimReaperSecondOrder) {
  const Vector v0 = recipes::grim_reaper_velocity(2, 2);
  std::vector<double> errs;
  for (int N : {41, 81, 161, 321}) {
    const GraphPatch p = recipes::grim_reaper(2, 2, 0.1, 1.0, N, N);
    errs.push_back(soliton_residual_max(p, translator(v0), box(1.0, 1.0)));
  }
  for (std::size_t k = 1; k < errs.size(); ++k)
    EXPECT_NEAR(std::log2(errs[k - 1] / errs[k]), 2.0, 0.3) << k;
}

TEST(Residual, GrimReaperProductSecondOrder) {
  const Vector v0 = recipes::grim_reaper_velocity(3, 2);
  std::vector<double> errs;
  for (int N : {41, 81, 161}) {
    const GraphPatch p = recipes::grim_reaper(3, 2, 0.1, 1.0, N, 9);
    errs.push_back(soliton_residual_max(p, translator(v0), box(1.0, 1.0, 3)));
  }
  for (std::size_t k = 1; k < errs.size(); ++k)
    EXPECT_NEAR(std::log2(errs[k - 1] / errs[k]), 2.0, 0.3) << k;
}

TEST(Residual, SphereShrinkerSecondOrder) {
  std::vector<double> errs;
  for (int N : {41, 81, 161}) {
    const GraphPatch p = recipes::sphere_graph(2, 2, 2.0, 1.2, N);
    errs.push_back(soliton_residual_max(p, shrinker(), box(0.8, 0.8)));
  }
  for (std::size_t k = 1; k < errs.size(); ++k)
    EXPECT_NEAR(std::log2(errs[k - 1] / errs[k]), 2.0, 0.3) << k;
}

TEST(DriftOperators, ConstantFieldGivesZero) {
  const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, 21, 11);
  const ScalarField one(p.node_count(), 3.0);
  const ScalarField zero(p.node_count(), 0.0);
  EXPECT_GT(finite_count(drift_L(one, p)), 0u);
  EXPECT_LT(finite_max_abs(drift_L(one, p), zero), 1e-12);
  EXPECT_LT(finite_max_abs(drift_LII(one, p, recipes::grim_reaper_velocity(2, 2)), zero), 1e-12);
}

TEST(DriftOperators, BoundaryIsUndefined) {
  const GraphPatch p = plane_through_origin();
  const ScalarField f = drift_L(radius_squared(p), p);
  EXPECT_TRUE(std::isnan(f[0]));
  EXPECT_THROW(drift_L(ScalarField(3, 0.0), p), DimensionError);
  EXPECT_THROW(ambient_gradient(radius_squared(p), p, 0), StencilError);
}

TEST(DriftOperators, RadiusSquaredOnFlatPlane) {
  const GraphPatch p = plane_through_origin();
  const ScalarField r2 = radius_squared(p);
  const ScalarField lr = drift_L(r2, p);
  ScalarField expected(r2.size());
  for (std::size_t k = 0; k < r2.size(); ++k) expected[k] = 4.0 - r2[k];
  EXPECT_LT(finite_max_abs(lr, expected), 1e-12);
}

TEST(DriftOperators, LinearFieldOnAffinePatch) {
  const GraphPatch p = plane_through_origin();
  Vector a(4);
  a << 0.3, -1.0, 2.0, 0.7;
  ScalarField f(p.node_count());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = a.dot(position(p, k));
  const Vector v0 = Vector::Unit(4, 3);
  const std::size_t node = p.nearest_node(std::vector<double>{0.0, 0.0});
  Matrix dF(4, 2);
  dF << Matrix::Identity(2, 2), jacobian(p, node);
  const Matrix proj_t = dF * (dF.transpose() * dF).inverse() * dF.transpose();
  const double expected = v0.dot(proj_t * a);
  const ScalarField l = drift_LII(f, p, v0);
  EXPECT_NEAR(l[node], expected, 1e-12);
  EXPECT_LT((ambient_gradient(f, p, node) - proj_t * a).norm(), 1e-12);
}

TEST(DriftOperators, Linearity) {
  const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, 21, 11);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  ScalarField f(p.node_count()), h(p.node_count()), mix(p.node_count());
  const double a = 1.7, b = -0.4;
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = g(rng);
    h[k] = g(rng);
    mix[k] = a * f[k] + b * h[k];
  }
  const Vector v0 = recipes::grim_reaper_velocity(2, 2);
  for (int which = 0; which < 2; ++which) {
    auto op = [&](const ScalarField& x) { return which == 0 ? drift_L(x, p) : drift_LII(x, p, v0); };
    const ScalarField lf = op(f), lh = op(h), lm = op(mix);
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!std::isfinite(lm[k])) continue;
      const double want = a * lf[k] + b * lh[k];
      EXPECT_NEAR(lm[k], want, 1e-10 * (1 + std::abs(want)));
    }
  }
}

TEST(DistanceIdentity, TranslatorOnGrimReaper) {
  const Vector v0 = recipes::grim_reaper_velocity(2, 2);
  std::vector<double> defects;
  for (int N : {41, 81, 161}) {
    const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, N, N);
    const IdentityCheck c = check_distance_identity(p, translator(v0), box(kPi / 2 - 0.3, 1.0));
    EXPECT_TRUE(c.passed) << N << " defect " << c.defect << " tol " << c.tolerance;
    EXPECT_GT(c.evaluated, 0u);
    defects.push_back(c.defect);
  }
  EXPECT_NEAR(std::log2(defects[1] / defects[2]), 2.0, 0.5);
}

TEST(DistanceIdentity, ShrinkerOnSphere) {
  const GraphPatch p = recipes::sphere_graph(2, 2, 2.0, 1.2, 81);
  const IdentityCheck c = check_distance_identity(p, shrinker(), box(0.8, 0.8));
  EXPECT_TRUE(c.passed) << c.defect;
}

TEST(Inequalities, AffineTranslatorHasZeroMargins) {
  const InequalityReport r = check_soliton_inequalities(plane_through_origin(), translator(tangent_direction()), 0.3);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.worst_v_margin, 0.0, 1e-12);
  EXPECT_NEAR(r.worst_b_margin, 0.0, 1e-12);
}

TEST(Inequalities, GrimReaperWithinSlack) {
  const Vector v0 = recipes::grim_reaper_velocity(2, 2);
  for (int N : {41, 81}) {
    const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, N, N);
    InequalityOptions opt;
    opt.region = box(kPi / 2 - 0.3, 1.0);
    const InequalityReport r = check_soliton_inequalities(p, translator(v0), 0.25, opt);
    EXPECT_TRUE(r.v_passed) << r.worst_v_margin;
    EXPECT_TRUE(r.b_passed) << r.worst_b_margin << " slack " << r.slack;
    EXPECT_GT(r.evaluated, 0u);
  }
}

TEST(Inequalities, SphereShrinkerWithinSlack) {
  const GraphPatch p = recipes::sphere_graph(2, 2, 2.0, 1.2, 81);
  InequalityOptions opt;
  opt.region = box(0.8, 0.8);
  const InequalityReport r = check_soliton_inequalities(p, shrinker(), 0.1, opt);
  EXPECT_TRUE(r.passed()) << r.worst_v_margin << " " << r.worst_b_margin;
}

TEST(Inequalities, PerturbedPatchIsRejected) {
  const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, 41, 41);
  std::vector<double> vals(p.values().begin(), p.values().end());
  for (std::size_t node = 0; node < p.node_count(); ++node)
    vals[node * 2] += 0.05 * std::sin(3 * p.coord(node, 0)) * std::cos(2 * p.coord(node, 1));
  try {
    check_soliton_inequalities(p.with_values(vals), translator(recipes::grim_reaper_velocity(2, 2)), 0.2);
    FAIL() << "expected NotASoliton";
  } catch (const NotASoliton& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Inequalities, InvariantUnderCodimensionRotation) {
  const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, 41, 41);
  const Vector v0 = recipes::grim_reaper_velocity(2, 2);
  InequalityOptions opt;
  opt.region = box(kPi / 2 - 0.3, 1.0);
  const InequalityReport base = check_soliton_inequalities(p, translator(v0), 0.25, opt);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix Q = random_rotation(2, seed);
    std::vector<double> vals(p.values().size());
    for (std::size_t node = 0; node < p.node_count(); ++node) {
      const Vector u = Q * Vector{{p.value(node, 0), p.value(node, 1)}};
      vals[2 * node] = u(0);
      vals[2 * node + 1] = u(1);
    }
    Vector w = v0;
    w.tail(2) = Q * v0.tail(2);
    const InequalityReport r = check_soliton_inequalities(p.with_values(vals), translator(w), 0.25, opt);
    EXPECT_NEAR(r.worst_v_margin, base.worst_v_margin, 1e-8);
    EXPECT_NEAR(r.worst_b_margin, base.worst_b_margin, 1e-8);
    EXPECT_NEAR(r.residual_max, base.residual_max, 1e-8);
  }
}

TEST(Ramp, RadialRampConstant) {
  const double c0 = ramp_constant_c0();
  EXPECT_GT(c0, 0.0);
  for (double s = 0.0; s <= 0.5; s += 0.01) EXPECT_EQ(Ramp::value(s), 1.0);
  EXPECT_EQ(Ramp::value(1.0), 0.0);
  for (int k = 1; k < 100000; ++k) {
    const double s = 0.5 + 0.5 * k / 100000.0 + 1.3e-6;
    if (s >= 1.0) break;
    const double v = Ramp::value(s);
    if (v <= 0.0) continue;
    ASSERT_LE(-Ramp::d2(s), c0);
    ASSERT_LE(Ramp::d1(s) * Ramp::d1(s) / v, c0);
  }
}

TEST(SolitonBound, AffineGivesZero) {
  const SolitonBoundTable t =
      localized_soliton_bound(plane_through_origin(), translator(tangent_direction()), {0.5, 1.0}, 3.0, 1.0);
  for (const auto& row : t.rows) EXPECT_LT(row.ratio, 1e-20);
  EXPECT_TRUE(t.slope_bounded);
  EXPECT_TRUE(t.gauss_image_ok);
}

TEST(SolitonBound, GrimReaperMatchesClosedForm) {
  // |B|^2 = cos^2 x1 peaks at the origin, so the ratio is 1 / (1/R + 1/R^2).
  const GraphPatch p = recipes::grim_reaper(2, 2, 0.2, 1.0, 81, 41);
  const SolitonBoundTable t =
      localized_soliton_bound(p, translator(recipes::grim_reaper_velocity(2, 2)), {2, 4, 8}, 3.0, 1.0);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& row : t.rows) {
    const double exact = 1.0 / (1.0 / row.R + 1.0 / (row.R * row.R));
    EXPECT_NEAR(row.ratio, exact, 1e-3 * exact);
  }
  EXPECT_FALSE(t.slope_bounded);
  EXPECT_TRUE(t.rows.back().window_truncated);
  EXPECT_GT(t.c0, 0.0);
}
