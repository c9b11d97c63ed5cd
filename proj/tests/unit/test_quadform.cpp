#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gaussflow/errors.hpp"
#include "gaussflow/quadform.hpp"

using namespace gaussflow;

namespace {

ShapeTensor random_tensor(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ShapeTensor h(n, m);
  for (std::size_t k = 0; k < h.dof(); ++k) h.coord(k) = g(rng);
  return h;
}

LambdaProfile random_profile(int n, int m, std::mt19937_64& rng, double cap = 3.0) {
  std::uniform_real_distribution<double> u(0.0, cap);
  LambdaProfile p{n, m, {}};
  for (int i = 0; i < n; ++i) p.lambdas.push_back(u(rng));
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

// h'_{a,ij} = sum R_ab R_ik R_jl h_{b,kl} on the paired block; unpaired
// normal indices keep their label but rotate their tangent slots.
ShapeTensor rotate_paired(const ShapeTensor& h, const Matrix& R) {
  const int n = h.n(), m = h.m();
  ShapeTensor out(n, m);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) {
          double wab;
          if (a < n && b < n) wab = R(a, b);
          else wab = (a == b) ? 1.0 : 0.0;
          if (wab == 0.0) continue;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) s += wab * R(i, k) * R(j, l) * h(b, k, l);
        }
        out.set(a, i, j, s);
      }
  return out;
}

}  // namespace

TEST(QLogV, ZeroProfileGivesNorm) {
  std::mt19937_64 rng(1);
  for (auto [n, m] : {std::pair{1, 1}, {2, 2}, {2, 4}, {3, 3}}) {
    const ShapeTensor h = random_tensor(n, m, rng);
    const LambdaProfile p{n, m, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    EXPECT_NEAR(q_logv(p, h), h.norm2(), 1e-12 * h.norm2());
    EXPECT_NEAR(q_logv_via_coframe(p, h), h.norm2(), 1e-12 * h.norm2());
    EXPECT_NEAR(q_v(p, h), h.norm2(), 1e-12 * h.norm2());
  }
}

TEST(QLogV, CurveCase) {
  std::mt19937_64 rng(2);
  const ShapeTensor h = random_tensor(1, 3, rng);
  const LambdaProfile p{1, 3, {1.7}};
  const double expected = (1 + 1.7 * 1.7) * std::pow(h(0, 0, 0), 2) + std::pow(h(1, 0, 0), 2) +
                          std::pow(h(2, 0, 0), 2);
  EXPECT_NEAR(q_logv(p, h), expected, 1e-12 * expected);
}

TEST(QLogV, SingleComponentViaCoframe) {
  ShapeTensor h(2, 3);
  h.set(0, 0, 0, 1.0);
  const LambdaProfile p{2, 3, {0.8, 0.0}};
  EXPECT_NEAR(q_logv_via_coframe(p, h), 1.64, 1e-14);
  EXPECT_NEAR(q_logv(p, h), 1.64, 1e-14);
}

TEST(QLogV, PathsAgreeOnRandomInputs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int t = 0; t < 10000; ++t) {
    const int n = dim(rng);
    const int m = std::max(n, dim(rng));
    const ShapeTensor h = random_tensor(n, m, rng);
    const LambdaProfile p = random_profile(n, m, rng);
    ASSERT_LE(rel(q_logv(p, h), q_logv_via_coframe(p, h)), 1e-12) << "n=" << n << " m=" << m;
  }
}

TEST(QLogV, DimensionMismatchThrows) {
  const ShapeTensor h(2, 2);
  EXPECT_THROW(q_logv(LambdaProfile{2, 3, {0, 0}}, h), DimensionError);
  EXPECT_THROW(q_v(LambdaProfile{3, 3, {0, 0, 0}}, h), DimensionError);
  EXPECT_THROW(q_logv_via_coframe(LambdaProfile{2, 2, {0}}, h), DimensionError);
  EXPECT_THROW((LambdaProfile{2, 2, {-1, 0}}).validate(), DomainError);
  EXPECT_THROW((LambdaProfile{2, 2, {NAN, 0}}).validate(), DomainError);
  EXPECT_THROW((LambdaProfile{3, 2, {0, 0, 0}}).validate(), DimensionError);
}

TEST(QV, HandEvaluation) {
  ShapeTensor h(2, 2);
  h.set(0, 0, 0, 1.0);
  EXPECT_NEAR(q_v(LambdaProfile{2, 2, {1.0, 1.0}}, h), 6.0, 1e-13);
}

TEST(QV, DominatesScaledLogForm) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 2000; ++t) {
    const ShapeTensor h = random_tensor(2, 3, rng);
    const LambdaProfile p = random_profile(2, 3, rng);
    const double v = slope_from_lambdas(p.lambdas);
    EXPECT_GE(q_v(p, h), v * q_logv(p, h) - 1e-12 * std::abs(v * q_logv(p, h)));
  }
}

TEST(QForms, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const ShapeTensor h = random_tensor(3, 4, rng);
    const LambdaProfile p = random_profile(3, 4, rng);
    std::vector<int> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    LambdaProfile pp = p;
    ShapeTensor hp(3, 4);
    for (int i = 0; i < 3; ++i) pp.lambdas[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = p.lambdas[static_cast<std::size_t>(i)];
    auto sigma = [&](int a) { return a < 3 ? perm[static_cast<std::size_t>(a)] : a; };
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) hp.set(sigma(a), sigma(i), sigma(j), h(a, i, j));
    EXPECT_LE(rel(q_logv(p, h), q_logv(pp, hp)), 1e-13);
    EXPECT_LE(rel(q_v(p, h), q_v(pp, hp)), 1e-13);
  }
}

TEST(QForms, InvariantUnderRotationOfDegenerateBlock) {
  // Equal lambdas leave the adapted frame free up to a rotation acting on
  // paired tangent and normal indices together.
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    const ShapeTensor h = random_tensor(2, 3, rng);
    const LambdaProfile p{2, 3, {0.7, 0.7}};
    const Matrix R = random_rotation(2, 1000 + static_cast<std::uint64_t>(t));
    const ShapeTensor hr = rotate_paired(h, R);
    EXPECT_NEAR(hr.norm2(), h.norm2(), 1e-12 * h.norm2());
    EXPECT_LE(rel(q_logv(p, h), q_logv(p, hr)), 1e-12);
    EXPECT_LE(rel(q_v(p, h), q_v(p, hr)), 1e-12);
  }
}

TEST(Rayleigh, TrivialValues) {
  for (int n = 1; n <= 4; ++n)
    for (int m = n; m <= 4; ++m) {
      const LambdaProfile zero{n, m, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
      EXPECT_NEAR(rayleigh_min(zero, Form::LogV), 1.0, 1e-12);
      EXPECT_NEAR(rayleigh_min(zero, Form::V), 1.0, 1e-12);
    }
  EXPECT_NEAR(rayleigh_min(LambdaProfile{1, 3, {2.5}}, Form::LogV), 1.0, 1e-12);
  EXPECT_NEAR(rayleigh_min(LambdaProfile{1, 1, {2.5}}, Form::LogV), 1.0 + 6.25, 1e-11);
}

TEST(Rayleigh, FormMatrixReproducesForm) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const ShapeTensor h = random_tensor(2, 3, rng);
    const LambdaProfile p = random_profile(2, 3, rng);
    for (Form f : {Form::LogV, Form::V}) {
      const Matrix M = form_matrix(p, f);
      Vector x(static_cast<Eigen::Index>(h.dof()));
      for (std::size_t k = 0; k < h.dof(); ++k) {
        const auto idx = h.slot_indices(k);
        x(static_cast<Eigen::Index>(k)) = h.coord(k) * (idx[1] == idx[2] ? 1.0 : std::sqrt(2.0));
      }
      EXPECT_NEAR(x.squaredNorm(), h.norm2(), 1e-12 * h.norm2());
      const double q = evaluate_form(f, p, h);
      EXPECT_LE(rel(x.dot(M * x), q), 1e-11);
    }
  }
}

TEST(Rayleigh, OneSidedBoundOnRandomTensors) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    const LambdaProfile p = random_profile(3, 3, rng, 1.5);
    const double lo_logv = rayleigh_min(p, Form::LogV);
    const double lo_v = rayleigh_min(p, Form::V);
    for (int s = 0; s < 20; ++s) {
      const ShapeTensor h = random_tensor(3, 3, rng);
      EXPECT_GE(q_logv(p, h) / h.norm2(), lo_logv - 1e-10);
      EXPECT_GE(q_v(p, h) / h.norm2(), lo_v - 1e-10);
    }
  }
}

TEST(Rayleigh, MatchesRandomSearch) {
  // 10^6 unit tensors: uniform draws, then draws concentrated around the
  // running best with a shrinking radius.
  const LambdaProfile p{2, 2, {0.9, 0.9}};
  const double oracle = rayleigh_min(p, Form::LogV);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  ShapeTensor best(2, 2);
  double best_q = INFINITY;
  const std::size_t dof = best.dof();
  const int total = 1000000;
  for (int t = 0; t < total; ++t) {
    ShapeTensor h(2, 2);
    const double radius = t < 100000 ? -1.0 : 0.3 * std::pow(1e-3, double(t - 100000) / (total - 100000));
    for (std::size_t k = 0; k < dof; ++k) h.coord(k) = (radius < 0 ? 0.0 : best.coord(k)) + (radius < 0 ? 1.0 : radius) * g(rng);
    const double nrm = std::sqrt(h.norm2());
    for (std::size_t k = 0; k < dof; ++k) h.coord(k) /= nrm;
    const double q = q_logv(p, h);
    if (q < best_q) {
      best_q = q;
      best = h;
    }
  }
  EXPECT_GE(best_q, oracle - 1e-10);
  EXPECT_NEAR(best_q, oracle, 1e-4);
}

TEST(Rayleigh, CapError) {
  EXPECT_THROW(rayleigh_min(LambdaProfile{2, 7, {0, 0}}, Form::LogV), CapError);
  EXPECT_THROW(form_matrix(LambdaProfile{7, 7, std::vector<double>(7, 0.0)}, Form::V), CapError);
}

TEST(Certify, BJ14HoldsAtHalf) {
  const std::vector<Dims> dims{{2, 2}};
  const BoundReport r = certify_bj14(0.5, 1000, dims, 11);
  EXPECT_TRUE(r.passed);
  EXPECT_GE(r.min_rayleigh, 0.5 - 1e-9);
  EXPECT_DOUBLE_EQ(r.claimed_bound, 0.5);
  EXPECT_NEAR(r.margin, r.min_rayleigh - r.claimed_bound, 1e-15);
  EXPECT_GE(r.samples, 1000u);
}

TEST(Certify, BJ14HoldsNearOne) {
  const std::vector<Dims> dims{{3, 3}};
  const BoundReport r = certify_bj14(0.9, 300, dims, 12);
  EXPECT_TRUE(r.passed);
  EXPECT_GE(r.min_rayleigh, 0.1 - 1e-9);
}

TEST(Certify, SmallThresholdApproachesOne) {
  const std::vector<Dims> dims{{2, 3}};
  const BoundReport r = certify_bj14(1e-6, 200, dims, 13);
  EXPECT_NEAR(r.min_rayleigh, 1.0, 1e-5);
  EXPECT_NEAR(r.claimed_bound, 1.0, 1e-5);
  EXPECT_THROW(certify_bj14(1.0, 10, dims, 1), DomainError);
  EXPECT_THROW(certify_bj14(0.0, 10, dims, 1), DomainError);
}

TEST(Certify, EveryProfileRespectsFloor) {
  for (double lambda0 : {0.2, 0.6}) {
    for (const LambdaProfile& p : sample_profiles(Constraint::PairProduct, lambda0, {3, 4}, 200, 14)) {
      EXPECT_LE(max_pair_product(p.lambdas), lambda0 * (1 + 1e-12));
      EXPECT_GE(rayleigh_min(p, Form::LogV), 1 - lambda0 - 1e-9);
    }
  }
}

TEST(Certify, ScanIsDeterministic) {
  const std::vector<Dims> dims{{2, 2}, {2, 3}};
  const BoundReport a = certify_bj14(0.4, 300, dims, 21);
  const BoundReport b = certify_bj14(0.4, 300, dims, 21);
  EXPECT_EQ(a.min_rayleigh, b.min_rayleigh);
  EXPECT_EQ(a.worst_profile.lambdas, b.worst_profile.lambdas);
}

TEST(Estimate, Eps0) {
  const std::vector<Dims> dims{{2, 2}};
  EXPECT_NEAR(estimate_eps0(1.0, 50, dims, 1).min_rayleigh, 1.0, 1e-12);
  const BoundReport r = estimate_eps0(2.9, 500, dims, 2);
  EXPECT_GT(r.min_rayleigh, 0.0);
  EXPECT_TRUE(r.passed);
  EXPECT_NO_THROW(estimate_eps0(3.5, 200, dims, 3));
  EXPECT_THROW(estimate_eps0(0.5, 10, dims, 3), DomainError);
  for (const LambdaProfile& p : sample_profiles(Constraint::Slope, 2.0, {2, 2}, 100, 4))
    EXPECT_LE(slope_from_lambdas(p.lambdas), 2.0 * (1 + 1e-12));
}

TEST(Estimate, EpsT2PositiveAndMonotone) {
  const std::vector<Dims> dims{{2, 2}, {2, 3}};
  double prev = INFINITY;
  for (double L : {0.5, 1.1, 1.3, 1.41}) {
    const BoundReport r = estimate_eps_T2(L, 500, dims, 5);
    EXPECT_GT(r.min_rayleigh, 0.0) << L;
    if (L <= 1.0) EXPECT_GE(r.min_rayleigh, 1 - L - 1e-9);
    EXPECT_LE(r.min_rayleigh, prev + 1e-12) << L;
    prev = r.min_rayleigh;
  }
  EXPECT_THROW(estimate_eps_T2(1.5, 10, dims, 1), DomainError);
}
