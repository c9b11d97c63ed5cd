#include "gaussflow/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gaussflow/errors.hpp"
#include "gaussflow/parallel.hpp"

namespace gaussflow {

void LambdaProfile::validate() const {
  if (n < 1 || m < n) throw DimensionError("lambda profile requires 1 <= n <= m");
  if (static_cast<int>(lambdas.size()) != n) {
    throw DimensionError("lambda profile must have exactly n entries");
  }
  for (double l : lambdas) {
    if (!std::isfinite(l) || l < 0.0) throw DomainError("lambdas must be finite and >= 0");
  }
}

namespace {

void require_match(const LambdaProfile& p, const ShapeTensor& h) {
  p.validate();
  if (h.n() != p.n || h.m() != p.m) {
    std::ostringstream os;
    os << "shape tensor (" << h.n() << ", " << h.m() << ") does not match profile (" << p.n
       << ", " << p.m << ")";
    throw DimensionError(os.str());
  }
}

double sq(double x) { return x * x; }

}  // namespace

double q_logv(const LambdaProfile& profile, const ShapeTensor& h) {
  require_match(profile, h);
  const int n = profile.n;
  const int m = profile.m;
  const auto& lam = profile.lambdas;
  auto L = [&](int i) { return lam[static_cast<std::size_t>(i)]; };

  double q = 0.0;
  for (int a = n; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += sq(h(a, i, j));

  for (int i = 0; i < n; ++i) q += (1.0 + sq(L(i))) * sq(h(i, i, i));

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      q += sq(h(j, i, i));
      q += (2.0 + sq(L(i))) * sq(h(i, i, j));
      q += 2.0 * L(i) * L(j) * h(i, j, i) * h(j, i, i);
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        q += sq(h(k, i, j)) + L(i) * L(j) * h(i, j, k) * h(j, i, k);
      }
  return q;
}

double q_logv_via_coframe(const LambdaProfile& profile, const ShapeTensor& h) {
  require_match(profile, h);
  const int n = profile.n;
  const int m = profile.m;
  const auto& lam = profile.lambdas;

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    // omega_{l alpha}(dgamma e_i) = h_{alpha, il}; omega vanishes for
    // unpaired second indices only in the lambda terms.
    auto omega = [&](int l, int alpha) { return h(alpha, i, l); };
    double metric = 0.0;
    for (int l = 0; l < n; ++l)
      for (int alpha = 0; alpha < m; ++alpha) metric += sq(omega(l, alpha));
    double diag = 0.0;
    for (int j = 0; j < n; ++j) diag += sq(lam[static_cast<std::size_t>(j)]) * sq(omega(j, j));
    double cross = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        cross += lam[static_cast<std::size_t>(j)] * lam[static_cast<std::size_t>(k)] *
                 omega(j, k) * omega(k, j);
      }
    total += metric + diag + cross;
  }
  return total;
}

double q_v(const LambdaProfile& profile, const ShapeTensor& h) {
  const double logv = q_logv(profile, h);
  const int n = profile.n;
  const auto& lam = profile.lambdas;
  double grad = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += lam[static_cast<std::size_t>(j)] * h(j, i, j);
    grad += s * s;
  }
  return slope_from_lambdas(lam) * (logv + grad);
}

double evaluate_form(Form form, const LambdaProfile& profile, const ShapeTensor& h) {
  return form == Form::LogV ? q_logv(profile, h) : q_v(profile, h);
}

Matrix form_matrix(const LambdaProfile& profile, Form form) {
  profile.validate();
  if (profile.n > kOracleDimCap || profile.m > kOracleDimCap) {
    throw CapError("eigen-oracle supports n, m <= 6");
  }
  ShapeTensor h(profile.n, profile.m);
  const auto dof = h.dof();
  // h coordinate = y coordinate / weight, weight sqrt(2) off the diagonal.
  std::vector<double> inv_weight(dof);
  for (std::size_t k = 0; k < dof; ++k) {
    const auto idx = h.slot_indices(k);
    inv_weight[k] = idx[1] == idx[2] ? 1.0 : 1.0 / std::sqrt(2.0);
  }
  auto eval = [&](std::size_t a, std::size_t b) {
    h.coord(a) += inv_weight[a];
    if (b != a) h.coord(b) += inv_weight[b];
    const double q = evaluate_form(form, profile, h);
    h.coord(a) = 0.0;
    h.coord(b) = 0.0;
    return q;
  };
  std::vector<double> diag(dof);
  for (std::size_t a = 0; a < dof; ++a) diag[a] = eval(a, a);
  Matrix mat(static_cast<Eigen::Index>(dof), static_cast<Eigen::Index>(dof));
  for (std::size_t a = 0; a < dof; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    mat(ia, ia) = diag[a];
    for (std::size_t b = a + 1; b < dof; ++b) {
      const auto ib = static_cast<Eigen::Index>(b);
      const double off = 0.5 * (eval(a, b) - diag[a] - diag[b]);
      mat(ia, ib) = off;
      mat(ib, ia) = off;
    }
  }
  return mat;
}

double rayleigh_min(const LambdaProfile& profile, Form form) {
  const Matrix mat = form_matrix(profile, form);
  Eigen::SelfAdjointEigenSolver<Matrix> es(mat, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

double constraint_value(Constraint c, std::span<const double> lam) {
  return c == Constraint::PairProduct ? max_pair_product(lam) : slope_from_lambdas(lam);
}

// Largest s with constraint(s * lam) <= threshold.
std::vector<double> scale_to_boundary(Constraint c, double threshold, std::vector<double> lam) {
  if (c == Constraint::PairProduct) {
    const double sup = max_pair_product(lam);
    if (sup <= 0.0) return lam;
    const double s = std::sqrt(threshold / sup);
    for (double& l : lam) l *= s;
    return lam;
  }
  const bool nonzero = std::any_of(lam.begin(), lam.end(), [](double l) { return l > 0; });
  if (!nonzero || threshold <= 1.0) return std::vector<double>(lam.size(), 0.0);
  double lo = 0.0, hi = 1.0;
  auto val = [&](double s) {
    double v = 1.0;
    for (double l : lam) v *= std::sqrt(1.0 + s * s * l * l);
    return v;
  };
  while (val(hi) < threshold) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (val(mid) <= threshold ? lo : hi) = mid;
  }
  for (double& l : lam) l *= lo;
  return lam;
}

std::vector<std::vector<double>> boundary_profiles(Constraint c, double t, int n) {
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::vector<double>> out;
  out.emplace_back(un, 0.0);
  if (c == Constraint::PairProduct) {
    const double r = std::sqrt(t);
    out.emplace_back(un, r);  // every pair saturated
    if (n >= 2) {
      for (double f : {1.5, 2.0, 4.0, 10.0}) {
        std::vector<double> p(un, r / f);
        p[0] = r * f;  // pairs with index 0 saturated
        out.push_back(p);
        std::vector<double> q(un, 0.0);
        q[0] = r * f;
        q[1] = r / f;
        out.push_back(q);
      }
      std::vector<double> two(un, 0.0);
      two[0] = two[1] = r;
      out.push_back(two);
    }
  } else {
    if (t > 1.0) {
      const double all = std::sqrt(std::pow(t, 2.0 / n) - 1.0);
      out.emplace_back(un, all);
      std::vector<double> one(un, 0.0);
      one[0] = std::sqrt(t * t - 1.0);
      out.push_back(one);
      if (n >= 2) {
        std::vector<double> two(un, 0.0);
        two[0] = two[1] = std::sqrt(t - 1.0);
        out.push_back(two);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<LambdaProfile> sample_profiles(Constraint constraint, double threshold, Dims dims,
                                           std::size_t count, std::uint64_t seed) {
  const int n = dims.n;
  std::vector<LambdaProfile> out;
  out.reserve(count);
  for (auto& lam : boundary_profiles(constraint, threshold, n)) {
    if (out.size() >= count) break;
    out.push_back({n, dims.m, std::move(lam)});
  }
  const double cap = constraint == Constraint::PairProduct
                         ? std::max(3.0, 2.0 * std::sqrt(threshold))
                         : std::sqrt(std::max(threshold * threshold - 1.0, 0.0));
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(n) << 32) ^
                      static_cast<std::uint64_t>(dims.m));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> lam(static_cast<std::size_t>(n));
  bool reject_mode = true;
  while (out.size() < count) {
    std::vector<double> accepted;
    if (reject_mode) {
      for (int attempt = 0; attempt < 200 && accepted.empty(); ++attempt) {
        for (double& l : lam) l = cap * unif(rng);
        if (constraint_value(constraint, lam) <= threshold) accepted = lam;
      }
    }
    if (accepted.empty()) {
      for (double& l : lam) l = cap * unif(rng);
      accepted = scale_to_boundary(constraint, threshold, lam);
    }
    out.push_back({n, dims.m, std::move(accepted)});
    reject_mode = !reject_mode;
  }
  return out;
}

namespace {

BoundReport scan(const std::string& label, Constraint constraint, Form form, double threshold,
                 double claimed, std::size_t trials, std::span<const Dims> dims,
                 std::uint64_t seed) {
  BoundReport rep;
  rep.label = label;
  rep.threshold = threshold;
  rep.claimed_bound = claimed;
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  for (const Dims& d : dims) {
    const auto profiles = sample_profiles(constraint, threshold, d, trials, seed);
    std::vector<double> values(profiles.size());
    parallel_for(profiles.size(),
                 [&](std::size_t k) { values[k] = rayleigh_min(profiles[k], form); });
    DimsResult dr;
    dr.dims = d;
    dr.samples = profiles.size();
    dr.min_rayleigh = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] < dr.min_rayleigh) {
        dr.min_rayleigh = values[k];
        dr.worst_profile = profiles[k];
      }
    }
    rep.samples += dr.samples;
    if (dr.min_rayleigh < rep.min_rayleigh) {
      rep.min_rayleigh = dr.min_rayleigh;
      rep.worst_profile = dr.worst_profile;
    }
    rep.by_dims.push_back(std::move(dr));
  }
  rep.margin = rep.min_rayleigh - rep.claimed_bound;
  return rep;
}

}  // namespace

BoundReport certify_bj14(double lambda0, std::size_t trials, std::span<const Dims> dims,
                         std::uint64_t seed) {
  if (!(lambda0 > 0.0 && lambda0 < 1.0)) throw DomainError("lambda0 must lie in (0, 1)");
  auto rep = scan("bj14", Constraint::PairProduct, Form::LogV, lambda0, 1.0 - lambda0, trials,
                  dims, seed);
  rep.passed = rep.margin >= -kCertifyTolerance;
  return rep;
}

BoundReport estimate_eps0(double v0, std::size_t trials, std::span<const Dims> dims,
                          std::uint64_t seed) {
  if (!(v0 >= 1.0)) throw DomainError("v0 must be >= 1");
  auto rep = scan("eps0", Constraint::Slope, Form::V, v0, 0.0, trials, dims, seed);
  rep.passed = rep.min_rayleigh > 0.0;
  return rep;
}

BoundReport estimate_eps_T2(double Lambda, std::size_t trials, std::span<const Dims> dims,
                            std::uint64_t seed) {
  if (!(Lambda > 0.0 && Lambda < std::sqrt(2.0))) {
    throw DomainError("Lambda must lie in (0, sqrt 2)");
  }
  const double claimed = Lambda <= 1.0 ? 1.0 - Lambda : 0.0;
  auto rep = scan("epsT2", Constraint::PairProduct, Form::LogV, Lambda, claimed, trials, dims,
                  seed);
  rep.passed = Lambda <= 1.0 ? rep.margin >= -kCertifyTolerance : rep.min_rayleigh > 0.0;
  return rep;
}

}  // namespace gaussflow
