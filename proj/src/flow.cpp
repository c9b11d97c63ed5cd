#include "gaussflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gaussflow/errors.hpp"
#include "gaussflow/parallel.hpp"
#include "gaussflow/quadform.hpp"

namespace gaussflow {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cell_volume(const GraphPatch& p) {
  double vol = 1.0;
  for (int a = 0; a < p.n(); ++a) vol *= p.spacing(a);
  return vol;
}
}  // namespace

std::string to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "rk2"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::Euler;
  if (s == "rk2") return Scheme::RK2;
  throw DomainError("unknown time scheme '" + s + "'");
}

double FlowConfig::time_step(const GraphPatch& patch) const {
  if (dt > 0.0) return dt;
  const double h = patch.min_spacing();
  return cfl * h * h;
}

void FlowConfig::validate(const GraphPatch& patch) const {
  if (steps < 0) throw DomainError("steps must be >= 0");
  if (monitor_every < 1) throw DomainError("monitor_every must be >= 1");
  if (!(cfl > 0.0)) throw DomainError("cfl factor must be positive");
  if (!(R > 0.0 && T > 0.0)) throw DomainError("cutoff window needs R, T > 0");
  const double h = patch.min_spacing();
  const double step = time_step(patch);
  if (!(step > 0.0) || step > cfl * h * h * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << step << " exceeds the stability bound " << cfl * h * h;
    throw DomainError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Time stepping

std::vector<double> graph_velocity(const GraphPatch& patch) {
  const int n = patch.n();
  const int m = patch.m();
  const auto um = static_cast<std::size_t>(m);
  std::vector<double> vel(patch.node_count() * um);
  parallel_for(patch.node_count(), [&](std::size_t node) {
    double du[kMaxDim][kMaxDim];
    double d2[kMaxDim][kMaxDim][kMaxDim];
    for (int a = 0; a < m; ++a) {
      const double u0 = patch.value(node, a);
      for (int i = 0; i < n; ++i) {
        const double hi = patch.spacing(i);
        const double up = patch.shifted(node, a, i, 1);
        const double dn = patch.shifted(node, a, i, -1);
        du[a][i] = (up - dn) / (2 * hi);
        d2[a][i][i] = (up - 2 * u0 + dn) / (hi * hi);
        for (int j = i + 1; j < n; ++j) {
          const double hj = patch.spacing(j);
          const double c = (patch.shifted2(node, a, i, 1, j, 1) - patch.shifted2(node, a, i, 1, j, -1) -
                            patch.shifted2(node, a, i, -1, j, 1) + patch.shifted2(node, a, i, -1, j, -1)) /
                           (4 * hi * hj);
          d2[a][i][j] = c;
          d2[a][j][i] = c;
        }
      }
    }
    SmallMatrix g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = i == j ? 1.0 : 0.0;
        for (int a = 0; a < m; ++a) s += du[a][i] * du[a][j];
        g(i, j) = s;
      }
    const SmallMatrix ginv = g.inverse();
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += ginv(i, j) * d2[a][i][j];
      vel[node * um + static_cast<std::size_t>(a)] = s;
    }
  });
  return vel;
}

namespace {

void check_finite(std::span<const double> values, int m) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      const std::size_t node = k / static_cast<std::size_t>(m);
      throw BlowupError("non-finite value at node " + std::to_string(node), node);
    }
  }
}

}  // namespace

GraphPatch mcf_step(const GraphPatch& patch, double dt, Scheme scheme, double cfl) {
  const double h = patch.min_spacing();
  if (!(dt > 0.0) || dt > cfl * h * h * (1.0 + 1e-12)) {
    throw DomainError("time step outside the parabolic stability bound");
  }
  const auto vals = patch.values();
  const auto k1 = graph_velocity(patch);
  std::vector<double> out(vals.begin(), vals.end());
  if (scheme == Scheme::Euler) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += dt * k1[k];
  } else {
    std::vector<double> mid(vals.begin(), vals.end());
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] += dt * k1[k];
    check_finite(mid, patch.m());
    const auto k2 = graph_velocity(patch.with_values(mid));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += 0.5 * dt * (k1[k] + k2[k]);
  }
  check_finite(out, patch.m());
  return patch.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Cutoff

double Ramp::base(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double x = 2.0 * s - 1.0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double Ramp::base_d1(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double x = 2.0 * s - 1.0;
  return -2.0 * 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

double Ramp::base_d2(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double x = 2.0 * s - 1.0;
  return -4.0 * 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

double Ramp::value(double s) {
  const double b = base(s);
  return b * b * b * b;
}

double Ramp::d1(double s) {
  const double b = base(s);
  return 4.0 * b * b * b * base_d1(s);
}

double Ramp::d2(double s) {
  const double b = base(s);
  const double b1 = base_d1(s);
  return 12.0 * b * b * b1 * b1 + 4.0 * b * b * b * base_d2(s);
}

CutoffValue cutoff_eta(double r, double t, double R, double T) {
  CutoffValue out;
  if (t > 0.0 || t < -T) return out;
  const double s = std::abs(r) / R;
  const double tau = -t / T;
  const double psi = Ramp::value(s);
  const double chi = Ramp::value(tau);
  const double sign = r < 0 ? -1.0 : 1.0;
  out.value = psi * chi;
  out.dr = sign * Ramp::d1(s) / R * chi;
  out.drr = Ramp::d2(s) / (R * R) * chi;
  out.dt = -psi * Ramp::d1(tau) / T;
  return out;
}

const CutoffConstants& cutoff_constants() {
  // Every ratio reduces to a function of the ramp argument alone; take the
  // supremum over a dense grid of the transition interval with 2% headroom.
  static const CutoffConstants constants = [] {
    CutoffConstants c;
    constexpr int kSamples = 200000;
    for (int k = 1; k < kSamples; ++k) {
      const double s = 0.5 + 0.5 * k / kSamples;
      const double b = Ramp::base(s);
      if (b <= 0.0) continue;
      const double b1 = Ramp::base_d1(s);
      const double b2 = Ramp::base_d2(s);
      const double d1_half = 4.0 * b * std::abs(b1);                     // |psi'| / psi^{1/2}
      const double d1_tq = 4.0 * std::abs(b1);                           // |psi'| / psi^{3/4}
      const double d2_half = std::abs(12.0 * b1 * b1 + 4.0 * b * b2);    // |psi''| / psi^{1/2}
      const double d2_tq = std::abs(12.0 * b1 * b1 / b + 4.0 * b2);      // |psi''| / psi^{3/4}
      c.c_half = std::max({c.c_half, d1_half, d2_half});
      c.c_three_quarters = std::max({c.c_three_quarters, d1_tq, d2_tq});
      c.c_time = std::max(c.c_time, d1_half);
    }
    c.c_half *= 1.02;
    c.c_three_quarters *= 1.02;
    c.c_time *= 1.02;
    return c;
  }();
  return constants;
}

// ---------------------------------------------------------------------------
// Geometry fields and the identity residual

GeometryField compute_geometry(const GraphPatch& patch) {
  const std::size_t count = patch.node_count();
  GeometryField f;
  f.v.assign(count, kNaN);
  f.b_norm2.assign(count, kNaN);
  f.max_pair.assign(count, kNaN);
  f.radius.assign(count, 0.0);
  parallel_for(count, [&](std::size_t node) {
    f.radius[node] = position(patch, node).norm();
    if (!patch.is_interior(node, 1)) return;
    const Jet jt = jet(patch, node);
    const ShapeTensor h = shape_tensor(jt);
    const auto& lam = h.frame()->lambdas;
    f.v[node] = slope_from_lambdas(lam);
    f.b_norm2[node] = h.norm2();
    f.max_pair[node] = max_pair_product(lam);
  });
  return f;
}

namespace {

struct IdentityTerms {
  double dt_v = 0.0;
  double lap_v = 0.0;
  double drift = 0.0;  // xi^k d_k v
  double hess = 0.0;   // q_v
  double b_norm2 = 0.0;
  double max_pair = 0.0;
};

// Evaluates the terms of the identity at every node with a margin-2 stencil.
std::vector<std::optional<IdentityTerms>> identity_terms(const std::vector<double>* prev_v,
                                                         const GraphPatch& cur,
                                                         const GeometryField& v_cur,
                                                         const std::vector<double>* next_v,
                                                         double dt) {
  if (!prev_v && !next_v) throw DomainError("residual needs at least two time levels");
  const std::size_t count = cur.node_count();
  const bool prev = prev_v != nullptr;
  const bool next = next_v != nullptr;
  const std::vector<double>& v_prev = prev ? *prev_v : v_cur.v;
  const std::vector<double>& v_next = next ? *next_v : v_cur.v;
  const int n = cur.n();

  std::vector<std::optional<IdentityTerms>> out(count);
  parallel_for(count, [&](std::size_t node) {
    if (!cur.is_interior(node, 2)) return;
    IdentityTerms t;
    if (prev && next) {
      t.dt_v = (v_next[node] - v_prev[node]) / (2 * dt);
    } else if (next) {
      t.dt_v = (v_next[node] - v_cur.v[node]) / dt;
    } else {
      t.dt_v = (v_cur.v[node] - v_prev[node]) / dt;
    }

    const Jet jt = jet(cur, node);
    const Matrix ginv = induced_metric(Matrix(jt.du)).inverse();
    // Finite differences of the v field.
    auto vshift = [&](int axis, int off) {
      const std::size_t stride = cur.stride(axis);
      const int g = cur.grid()[static_cast<std::size_t>(axis)];
      int i = cur.index(node, axis) + off;
      i = ((i % g) + g) % g;
      return v_cur.v[node - static_cast<std::size_t>(cur.index(node, axis)) * stride +
                     static_cast<std::size_t>(i) * stride];
    };
    auto vshift2 = [&](int a, int oa, int b, int ob) {
      const std::size_t sa = cur.stride(a), sb = cur.stride(b);
      const int ga = cur.grid()[static_cast<std::size_t>(a)];
      const int gb = cur.grid()[static_cast<std::size_t>(b)];
      int ia = cur.index(node, a) + oa;
      int ib = cur.index(node, b) + ob;
      ia = ((ia % ga) + ga) % ga;
      ib = ((ib % gb) + gb) % gb;
      std::size_t nb = node - static_cast<std::size_t>(cur.index(node, a)) * sa -
                       static_cast<std::size_t>(cur.index(node, b)) * sb;
      nb += static_cast<std::size_t>(ia) * sa + static_cast<std::size_t>(ib) * sb;
      return v_cur.v[nb];
    };
    const double v0 = v_cur.v[node];
    Vector grad(n);
    Matrix hess(n, n);
    for (int i = 0; i < n; ++i) {
      const double hi = cur.spacing(i);
      const double up = vshift(i, 1), dn = vshift(i, -1);
      grad(i) = (up - dn) / (2 * hi);
      hess(i, i) = (up - 2 * v0 + dn) / (hi * hi);
      for (int j = i + 1; j < n; ++j) {
        const double hj = cur.spacing(j);
        const double c = (vshift2(i, 1, j, 1) - vshift2(i, 1, j, -1) - vshift2(i, -1, j, 1) +
                          vshift2(i, -1, j, -1)) /
                         (4 * hi * hj);
        hess(i, j) = c;
        hess(j, i) = c;
      }
    }
    const Vector xi = christoffel_drift(jt);
    t.drift = xi.dot(grad);
    t.lap_v = (ginv.cwiseProduct(hess)).sum() - t.drift;

    const ShapeTensor h = shape_tensor(jt);
    const auto& lam = h.frame()->lambdas;
    const LambdaProfile profile{n, cur.m(), lam};
    t.hess = q_v(profile, h);
    t.b_norm2 = h.norm2();
    t.max_pair = max_pair_product(lam);
    out[node] = t;
  });
  return out;
}

}  // namespace

namespace {

ResidualField residual_from_fields(const std::vector<double>* prev_v, const GraphPatch& cur,
                                   const GeometryField& cur_geo, const std::vector<double>* next_v,
                                   double dt, bool drift_correction) {
  const auto terms = identity_terms(prev_v, cur, cur_geo, next_v, dt);
  ResidualField r;
  r.values.assign(cur.node_count(), kNaN);
  double sum = 0.0;
  for (std::size_t node = 0; node < terms.size(); ++node) {
    if (!terms[node]) continue;
    const auto& t = *terms[node];
    const double dt_normal = drift_correction ? t.dt_v - t.drift : t.dt_v;
    const double res = dt_normal - t.lap_v + t.hess;
    r.values[node] = res;
    r.max_abs = std::max(r.max_abs, std::abs(res));
    sum += res * res;
    ++r.evaluated;
  }
  r.l2 = std::sqrt(sum * cell_volume(cur));
  return r;
}

}  // namespace

ResidualField residual_evolution_identity(const GraphPatch* prev, const GraphPatch& cur,
                                          const GraphPatch* next, double dt,
                                          bool drift_correction) {
  const auto geo = compute_geometry(cur);
  std::vector<double> pv, nv;
  if (prev) pv = compute_geometry(*prev).v;
  if (next) nv = compute_geometry(*next).v;
  return residual_from_fields(prev ? &pv : nullptr, cur, geo, next ? &nv : nullptr, dt,
                              drift_correction);
}

double bj_inequality_margin(const GraphPatch* prev, const GraphPatch& cur, const GraphPatch* next,
                            double dt, double lambda0) {
  const auto geo = compute_geometry(cur);
  std::vector<double> pv, nv;
  if (prev) pv = compute_geometry(*prev).v;
  if (next) nv = compute_geometry(*next).v;
  const auto terms = identity_terms(prev ? &pv : nullptr, cur, geo, next ? &nv : nullptr, dt);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    if (!t || t->max_pair > lambda0) continue;
    const double lhs = t->dt_v - t->drift - t->lap_v;
    worst = std::min(worst, -(1.0 - lambda0) * t->b_norm2 - lhs);
  }
  return worst;
}

namespace {

LocalizedMax localized_from_geometry(const GeometryField& geo, double t, const FlowConfig& config) {
  LocalizedMax best;
  for (std::size_t node = 0; node < geo.v.size(); ++node) {
    if (std::isnan(geo.v[node])) continue;
    const double phi = cutoff_eta(geo.radius[node], t, config.R, config.T).value;
    if (phi <= 0.0) continue;
    const double val = phi * geo.b_norm2[node] * std::exp(config.k * geo.v[node]);
    if (val > best.value) {
      best.value = val;
      best.node = node;
    }
  }
  return best;
}

}  // namespace

LocalizedMax localized_quantity(const GraphPatch& patch, double t, const FlowConfig& config) {
  LocalizedMax best;
  const std::size_t count = patch.node_count();
  std::vector<double> vals(count, 0.0);
  parallel_for(count, [&](std::size_t node) {
    if (!patch.is_interior(node, 1)) return;
    // |F| >= |x|, so nodes with |x| >= R sit outside the cutoff support.
    double x2 = 0.0;
    for (int a = 0; a < patch.n(); ++a) x2 += patch.coord(node, a) * patch.coord(node, a);
    if (x2 >= config.R * config.R) return;
    const double r = position(patch, node).norm();
    const double phi = cutoff_eta(r, t, config.R, config.T).value;
    if (phi <= 0.0) return;
    const ShapeTensor h = shape_tensor(patch, node);
    const double v = slope_from_lambdas(h.frame()->lambdas);
    vals[node] = phi * h.norm2() * std::exp(config.k * v);
  });
  for (std::size_t node = 0; node < count; ++node) {
    if (vals[node] > best.value) {
      best.value = vals[node];
      best.node = node;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

FlowSample monitor(const std::vector<double>* prev_v, const GraphPatch& cur,
                   const GeometryField& geo, const std::vector<double>* next_v, int step,
                   double time, double t_rel, double dt, const FlowConfig& cfg, FlowTrace& trace) {
  FlowSample s;
  s.step = step;
  s.time = time;
  for (std::size_t node = 0; node < cur.node_count(); ++node) {
    if (std::isnan(geo.v[node])) continue;
    s.max_v = std::max(s.max_v, geo.v[node]);
    s.sup_b = std::max(s.sup_b, std::sqrt(geo.b_norm2[node]));
    s.max_f = std::max(s.max_f, geo.b_norm2[node] * std::exp(cfg.k * geo.v[node]));
    if (cfg.lambda0 && geo.max_pair[node] > *cfg.lambda0) ++s.region_violations;
  }
  s.max_phi_f = localized_from_geometry(geo, t_rel, cfg).value;
  if (prev_v || next_v) {
    const auto res = residual_from_fields(prev_v, cur, geo, next_v, dt, cfg.drift_correction);
    s.residual_l2 = res.l2;
    s.residual_max = res.max_abs;
  }
  if (cfg.record_snapshots) {
    Snapshot snap;
    snap.step = step;
    snap.time = time;
    snap.radius = geo.radius;
    snap.b_norm.resize(geo.b_norm2.size());
    for (std::size_t k = 0; k < geo.b_norm2.size(); ++k) snap.b_norm[k] = std::sqrt(geo.b_norm2[k]);
    snap.v = geo.v;
    trace.snapshots.push_back(std::move(snap));
  }
  return s;
}

bool is_monitored(int step, const FlowConfig& cfg) {
  return step % cfg.monitor_every == 0 || step == cfg.steps;
}

}  // namespace

FlowResult run_flow(const GraphPatch& initial, const FlowConfig& config) {
  config.validate(initial);
  const double dt = config.time_step(initial);
  const double t_end = config.steps * dt;
  FlowTrace trace;

  // Geometry of the previous, current and next states, computed only when
  // a monitored step needs it.
  std::optional<GeometryField> geo_prev, geo_cur, geo_next;
  GraphPatch cur = initial;
  for (int step = 0; step <= config.steps; ++step) {
    const bool last = step == config.steps;
    std::optional<GraphPatch> next;
    if (!last) next = mcf_step(cur, dt, config.scheme, config.cfl);
    if (is_monitored(step, config)) {
      if (!geo_cur) geo_cur = compute_geometry(cur);
      if (next) geo_next = compute_geometry(*next);
      const double time = step * dt;
      trace.samples.push_back(monitor(geo_prev ? &geo_prev->v : nullptr, cur, *geo_cur,
                                      geo_next ? &geo_next->v : nullptr, step, time,
                                      time - t_end, dt, config, trace));
    }
    if (last) break;
    // Shift the cache: keep the current geometry only if the next step is
    // monitored (it becomes the previous level there).
    const bool next_monitored = is_monitored(step + 1, config);
    geo_prev = next_monitored ? std::move(geo_cur) : std::nullopt;
    geo_cur = std::move(geo_next);
    geo_next.reset();
    if (next_monitored && !geo_prev) {
      // Previous level for the upcoming monitor is the state we are leaving.
      geo_prev = compute_geometry(cur);
    }
    cur = std::move(*next);
  }
  return FlowResult{std::move(cur), std::move(trace)};
}

Verdict monitor_max_principle(const FlowTrace& trace, double v0) {
  Verdict verdict;
  if (trace.samples.empty()) {
    verdict.message = "empty trace";
    return verdict;
  }
  if (!(v0 < 3.0)) {
    verdict.passed = false;
    verdict.message = "v0 must be < 3";
    return verdict;
  }
  if (trace.samples.front().max_v > v0) {
    verdict.passed = false;
    verdict.first_violation_step = trace.samples.front().step;
    verdict.message = "initial max v exceeds v0";
    return verdict;
  }
  for (std::size_t k = 1; k < trace.samples.size(); ++k) {
    const double before = trace.samples[k - 1].max_v;
    const double after = trace.samples[k].max_v;
    if (after > before + kMaxPrincipleSlack * (1.0 + before)) {
      verdict.passed = false;
      verdict.first_violation_step = trace.samples[k].step;
      std::ostringstream os;
      os << "max v rose from " << before << " to " << after << " at step "
         << trace.samples[k].step;
      verdict.message = os.str();
      return verdict;
    }
  }
  verdict.message = "max v non-increasing";
  return verdict;
}

EstimateTable estimate_check(const FlowTrace& trace, const std::vector<double>& R_list,
                             const std::vector<double>& T_list) {
  if (trace.snapshots.empty()) throw DomainError("estimate check needs recorded snapshots");
  const double t_end = trace.snapshots.back().time;
  const double span = t_end - trace.snapshots.front().time;
  const double t_max = *std::max_element(T_list.begin(), T_list.end());
  if (span < t_max * (1.0 - 1e-12)) {
    throw DomainError("trace covers a shorter time window than the largest T");
  }
  EstimateTable table;
  for (const auto& snap : trace.snapshots) {
    for (double v : snap.v) {
      if (!std::isnan(v) && v >= 3.0) {
        table.hypothesis_violated = true;
        table.message = "slope v reached 3 at time " + std::to_string(snap.time);
      }
    }
  }
  for (double T : T_list) {
    double best = 0.0;
    for (double R : R_list) {
      EstimateEntry e;
      e.R = R;
      e.T = T;
      for (const auto& snap : trace.snapshots) {
        if (snap.time < t_end - 0.5 * T * (1.0 + 1e-12)) continue;
        for (std::size_t k = 0; k < snap.radius.size(); ++k) {
          if (std::isnan(snap.b_norm[k]) || snap.radius[k] > 0.5 * R * (1.0 + 1e-12)) continue;
          e.sup_b = std::max(e.sup_b, snap.b_norm[k]);
        }
      }
      e.c_fit = e.sup_b / (1.0 / R + 1.0 / std::sqrt(T));
      best = std::max(best, e.c_fit);
      table.max_c_fit = std::max(table.max_c_fit, e.c_fit);
      table.entries.push_back(e);
    }
    table.max_over_r.push_back(best);
  }
  const auto [lo, hi] = std::minmax_element(table.max_over_r.begin(), table.max_over_r.end());
  if (*hi > 0.0) table.variation = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  return table;
}

FlowTrace rescale_trace(const FlowTrace& trace, double s) {
  FlowTrace out = trace;
  for (auto& smp : out.samples) {
    smp.time *= s * s;
    smp.sup_b /= s;
  }
  for (auto& snap : out.snapshots) {
    snap.time *= s * s;
    for (double& r : snap.radius) r *= s;
    for (double& b : snap.b_norm) b /= s;
  }
  return out;
}

double rescaling_defect(const FlowTrace& trace, const std::vector<double>& R_list,
                        const std::vector<double>& T_list, double s) {
  if (!(s > 0.0)) throw DomainError("rescaling factor must be positive");
  std::vector<double> rs, ts;
  for (double R : R_list) rs.push_back(s * R);
  for (double T : T_list) ts.push_back(s * s * T);
  const EstimateTable a = estimate_check(trace, R_list, T_list);
  const EstimateTable b = estimate_check(rescale_trace(trace, s), rs, ts);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    const double x = a.entries[k].c_fit;
    const double y = b.entries[k].c_fit;
    const double scale = std::max(std::abs(x), std::abs(y));
    if (scale > 0.0) worst = std::max(worst, std::abs(x - y) / scale);
  }
  return worst;
}

}  // namespace gaussflow
