#include "gaussflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gaussflow/errors.hpp"
#include "gaussflow/grassmann.hpp"
#include "gaussflow/recipes.hpp"

namespace gaussflow::experiment {

namespace {

using json = nlohmann::json;

const std::vector<std::pair<Command, std::string>>& command_table() {
  static const std::vector<std::pair<Command, std::string>> table{
      {Command::GrassmannCheck, "grassmann-check"},
      {Command::BoundScan, "bound-scan"},
      {Command::FlowRun, "flow-run"},
      {Command::EstimateSweep, "estimate-sweep"},
      {Command::SolitonCheck, "soliton-check"},
  };
  return table;
}

std::string scan_name(ScanKind k) {
  switch (k) {
    case ScanKind::BJ14: return "bj14";
    case ScanKind::Eps0: return "eps0";
    case ScanKind::EpsT2: return "eps-T2";
  }
  return "";
}

// Typed access to one JSON object that records every violation and, at the
// end, every key that was never read.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {}

  bool has(const std::string& key) const { return obj_.contains(key); }

  void fail(const std::string& key, const std::string& msg) {
    errors_.push_back(qualified(key) + ": " + msg);
  }

  double number(const std::string& key, double def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_number()) {
      fail(key, "expected a number");
      return def;
    }
    return v->get<double>();
  }

  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_number_integer()) {
      fail(key, "expected an integer");
      return def;
    }
    return v->get<long long>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = take(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      fail(key, "must be >= 0");
    } else {
      fail(key, "expected a non-negative integer");
    }
    return def;
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      fail(key, "expected true or false");
      return def;
    }
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_string()) {
      fail(key, "expected a string");
      return def;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_array()) {
      fail(key, "expected an array of numbers");
      return def;
    }
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) {
        fail(key, "expected an array of numbers");
        return def;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_array()) {
      fail(key, "expected an array of integers");
      return def;
    }
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) {
        fail(key, "expected an array of integers");
        return def;
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  const json* raw(const std::string& key) { return take(key); }

  const json* object(const std::string& key) {
    const json* v = take(key);
    if (v && !v->is_object()) {
      fail(key, "expected an object");
      return nullptr;
    }
    return v;
  }

  std::string child(const std::string& key) const { return qualified(key); }

  void finish() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) errors_.push_back(qualified(it.key()) + ": unknown key");
    }
  }

 private:
  const json* take(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

bool valid_dim(int d) { return d >= 1 && d <= kMaxDim; }

Dims read_dims(Reader& r, const std::string& key, Dims def, std::vector<std::string>& errors) {
  const json* obj = r.object(key);
  if (!obj) return def;
  Reader d(*obj, r.child(key), errors);
  Dims out{static_cast<int>(d.integer("n", def.n)), static_cast<int>(d.integer("m", def.m))};
  if (!valid_dim(out.n)) d.fail("n", "must lie in [1, 6]");
  if (!valid_dim(out.m)) d.fail("m", "must lie in [1, 6]");
  d.finish();
  return out;
}

PatchRecipe read_patch(Reader& r, Dims dims) {
  PatchRecipe p;
  p.recipe = r.string("recipe", p.recipe);
  auto positive = [&](const char* key, double value) {
    if (!(value > 0.0)) r.fail(key, "must be > 0");
  };
  auto nodes_ok = [&](const char* key, long long value) {
    if (value < kMinGridNodes) r.fail(key, "must be >= " + std::to_string(kMinGridNodes));
  };
  if (p.recipe == "sine-product" || p.recipe == "saddle" || p.recipe == "sine-sum") {
    p.amplitude = r.number("amplitude", p.amplitude);
    p.wavenumber = r.number("wavenumber", p.wavenumber);
    p.nodes = static_cast<int>(r.integer("nodes", p.nodes));
    positive("wavenumber", p.wavenumber);
    nodes_ok("nodes", p.nodes);
    if (p.recipe != "sine-sum" && dims.n != 2) r.fail("recipe", p.recipe + " requires n = 2");
    if (p.recipe == "sine-sum" && dims.m < dims.n) r.fail("recipe", "sine-sum requires m >= n");
  } else if (p.recipe == "grim-reaper") {
    p.delta = r.number("delta", p.delta);
    p.half_width = r.number("half_width", p.half_width);
    p.nodes_x1 = static_cast<int>(r.integer("nodes_x1", p.nodes_x1));
    p.nodes_other = static_cast<int>(r.integer("nodes_other", p.nodes_other));
    if (!(p.delta > 0.0 && p.delta < std::numbers::pi / 2)) r.fail("delta", "must lie in (0, pi/2)");
    positive("half_width", p.half_width);
    nodes_ok("nodes_x1", p.nodes_x1);
    nodes_ok("nodes_other", p.nodes_other);
  } else if (p.recipe == "sphere") {
    p.radius = r.opt_number("radius");
    p.half_width = r.number("half_width", p.half_width);
    p.nodes = static_cast<int>(r.integer("nodes", p.nodes));
    positive("half_width", p.half_width);
    nodes_ok("nodes", p.nodes);
    const double radius = p.radius.value_or(std::sqrt(2.0 * dims.n));
    if (!(p.half_width * std::sqrt(static_cast<double>(dims.n)) < radius)) {
      r.fail("half_width", "box must lie inside the equatorial disc of the sphere");
    }
  } else if (p.recipe == "affine") {
    p.slope = Matrix::Zero(dims.m, dims.n);
    p.offset = Vector::Zero(dims.m);
    if (const json* s = r.raw("slope")) {
      bool ok = s->is_array() && static_cast<int>(s->size()) == dims.m;
      for (int a = 0; ok && a < dims.m; ++a) {
        const json& row = (*s)[static_cast<std::size_t>(a)];
        ok = row.is_array() && static_cast<int>(row.size()) == dims.n;
        for (int i = 0; ok && i < dims.n; ++i) {
          const json& e = row[static_cast<std::size_t>(i)];
          ok = e.is_number();
          if (ok) p.slope(a, i) = e.get<double>();
        }
      }
      if (!ok) r.fail("slope", "expected an m x n array of numbers");
    }
    const auto off = r.numbers("offset", std::vector<double>(static_cast<std::size_t>(dims.m), 0.0));
    if (static_cast<int>(off.size()) != dims.m) {
      r.fail("offset", "expected m entries");
    } else {
      for (int a = 0; a < dims.m; ++a) p.offset(a) = off[static_cast<std::size_t>(a)];
    }
    const auto un = static_cast<std::size_t>(dims.n);
    p.lo = r.numbers("lo", std::vector<double>(un, -1.0));
    p.hi = r.numbers("hi", std::vector<double>(un, 1.0));
    p.grid = r.integers("grid", std::vector<int>(un, 17));
    const std::string b = r.string("boundary", "fixed-affine");
    if (b == "periodic" || b == "fixed-affine") {
      p.boundary = boundary_from_string(b);
    } else {
      r.fail("boundary", "must be periodic or fixed-affine");
    }
    if (p.lo.size() != un || p.hi.size() != un || p.grid.size() != un) {
      r.fail("lo", "lo, hi and grid need n entries each");
    } else {
      for (std::size_t i = 0; i < un; ++i) {
        if (!(p.lo[i] < p.hi[i])) r.fail("hi", "must exceed lo on every axis");
        if (p.grid[i] < kMinGridNodes) r.fail("grid", "entries must be >= 5");
      }
    }
    if (p.boundary == Boundary::Periodic && !p.slope.isZero(0.0)) {
      r.fail("boundary", "a non-constant affine map is not periodic");
    }
  } else if (p.recipe == "file") {
    p.path = r.string("path", "");
    if (p.path.empty()) r.fail("path", "required for the file recipe");
  } else {
    r.fail("recipe", "unknown recipe '" + p.recipe +
                         "' (affine, sine-product, saddle, sine-sum, grim-reaper, sphere, file)");
  }
  return p;
}

// Returns whether `steps` was given explicitly.
bool read_flow(Reader& r, FlowParams& out, bool estimate) {
  FlowConfig& f = out.flow;
  f.dt = r.number("dt", f.dt);
  const std::string scheme = r.string("scheme", to_string(f.scheme));
  if (scheme == "euler" || scheme == "rk2") {
    f.scheme = scheme_from_string(scheme);
  } else {
    r.fail("scheme", "must be euler or rk2");
  }
  const bool has_steps = r.has("steps");
  f.steps = static_cast<int>(r.integer("steps", f.steps));
  out.duration = r.opt_number("duration");
  f.monitor_every = static_cast<int>(r.integer("monitor_every", f.monitor_every));
  f.k = r.number("k", f.k);
  f.v0 = r.number("v0", f.v0);
  f.lambda0 = r.opt_number("lambda0");
  f.R = r.number("R", f.R);
  f.T = r.number("T", f.T);
  f.cfl = r.number("cfl", f.cfl);
  f.drift_correction = r.boolean("drift_correction", f.drift_correction);
  f.record_snapshots = r.boolean("record_snapshots", f.record_snapshots);
  out.snapshots_jsonl = r.boolean("snapshots_jsonl", out.snapshots_jsonl);

  if (!(f.dt >= 0.0)) r.fail("dt", "must be >= 0 (0 selects cfl * h^2)");
  if (f.steps < 1) r.fail("steps", "must be >= 1");
  if (out.duration && !(*out.duration > 0.0)) r.fail("duration", "must be > 0");
  if (out.duration && has_steps) r.fail("duration", "give either steps or duration, not both");
  if (f.monitor_every < 1) r.fail("monitor_every", "must be >= 1");
  if (!(f.k >= 0.0)) r.fail("k", "must be >= 0");
  if (!(f.v0 >= 1.0)) r.fail("v0", "must be >= 1");
  if (f.lambda0 && !(*f.lambda0 > 0.0 && *f.lambda0 < 1.0)) r.fail("lambda0", "must lie in (0, 1)");
  if (!(f.R > 0.0)) r.fail("R", "must be > 0");
  if (!(f.T > 0.0)) r.fail("T", "must be > 0");
  if (!(f.cfl > 0.0 && f.cfl <= 0.25)) r.fail("cfl", "must lie in (0, 0.25]");
  if (estimate) f.record_snapshots = true;
  if (out.snapshots_jsonl) f.record_snapshots = true;
  return has_steps;
}

void check_positive_list(Reader& r, const char* key, const std::vector<double>& xs) {
  if (xs.empty()) r.fail(key, "must not be empty");
  for (double x : xs) {
    if (!(x > 0.0)) {
      r.fail(key, "entries must be > 0");
      break;
    }
  }
}

std::vector<std::string> section_names() {
  return {"grassmann", "bound", "flow", "estimate", "soliton", "patch"};
}

std::set<std::string> sections_for(Command c) {
  switch (c) {
    case Command::GrassmannCheck: return {"grassmann"};
    case Command::BoundScan: return {"bound"};
    case Command::FlowRun: return {"patch", "flow"};
    case Command::EstimateSweep: return {"patch", "flow", "estimate"};
    case Command::SolitonCheck: return {"patch", "soliton"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Artifact helpers

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, RunReport& report) : dir_(std::move(dir)), report_(report) {}

  void text(const std::string& name, const std::string& content) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw Error("cannot write " + (dir_ / name).string());
    os << content;
    report_.files.push_back(name);
  }

  void patch(const std::string& name, const GraphPatch& p) {
    save_patch((dir_ / name).string(), p);
    report_.files.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  RunReport& report_;
};

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& report) : report_(report) {}
  template <class F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, t0);
    } else {
      auto result = f();
      record(stage, t0);
      return result;
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    report_.timings.emplace_back(
        stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  RunReport& report_;
};

void add_check(RunReport& rep, std::string name, bool passed, std::optional<double> margin,
               std::string detail) {
  rep.checks.push_back({std::move(name), passed, margin, std::move(detail)});
}

std::string flow_csv(const FlowTrace& trace) {
  std::ostringstream os;
  os << "step,time,max_v,sup_B,max_f,max_phi_f,residual_L2,residual_max,region_violations\n";
  for (const auto& s : trace.samples) {
    os << s.step << ',' << fmt(s.time) << ',' << fmt(s.max_v) << ',' << fmt(s.sup_b) << ','
       << fmt(s.max_f) << ',' << fmt(s.max_phi_f) << ',' << fmt(s.residual_l2) << ','
       << fmt(s.residual_max) << ',' << s.region_violations << '\n';
  }
  return os.str();
}

std::string snapshots_jsonl(const FlowTrace& trace) {
  std::string out;
  for (const auto& snap : trace.snapshots) {
    json line;
    line["step"] = snap.step;
    line["time"] = snap.time;
    json v = json::array(), b = json::array(), r = json::array();
    for (double x : snap.v) v.push_back(finite_or_null(x));
    for (double x : snap.b_norm) b.push_back(finite_or_null(x));
    for (double x : snap.radius) r.push_back(finite_or_null(x));
    line["v"] = std::move(v);
    line["b_norm"] = std::move(b);
    line["radius"] = std::move(r);
    out += line.dump() + "\n";
  }
  return out;
}

FlowConfig resolve_flow(const FlowParams& params, const GraphPatch& patch) {
  FlowConfig cfg = params.flow;
  if (params.duration) {
    const double dt = cfg.time_step(patch);
    cfg.steps = static_cast<int>(std::ceil(*params.duration / dt * (1.0 - 1e-12)));
    cfg.dt = *params.duration / cfg.steps;
  }
  cfg.validate(patch);
  return cfg;
}

void run_grassmann(const ExperimentConfig& c, Artifacts& out, Stopwatch& sw, RunReport& rep) {
  const InclusionReport inc = sw.time("scan", [&] {
    return region_inclusion_scan(c.dims.n, c.dims.m, c.grassmann.trials, c.seed);
  });
  std::ostringstream os;
  os << "trial,v,w,max_pair,in_U2,in_BJX\n";
  for (std::size_t k = 0; k < inc.samples.size(); ++k) {
    const auto& s = inc.samples[k];
    os << k << ',' << fmt(s.v) << ',' << fmt(s.w) << ',' << fmt(s.max_pair) << ',' << s.in_u2
       << ',' << s.in_bjx << '\n';
  }
  out.text("samples.csv", os.str());
  add_check(rep, "u2_in_bjx", inc.violations == 0, 1.0 - inc.max_pair_seen,
            std::to_string(inc.violations) + " of " + std::to_string(inc.samples.size()) +
                " planes with v < 2 outside B_JX");
  add_check(rep, "strictness_witness", inc.witness_in_bjx && !inc.witness_in_u2, std::nullopt,
            "lambda = (1.5, 0.5): in B_JX " + std::string(inc.witness_in_bjx ? "yes" : "no") +
                ", in U2 " + (inc.witness_in_u2 ? "yes" : "no"));
  add_check(rep, "reciprocity", inc.worst_reciprocity <= 1e-10, 1e-10 - inc.worst_reciprocity,
            "max |v w - 1| = " + fmt(inc.worst_reciprocity));
}

void run_bound(const ExperimentConfig& c, Artifacts& out, Stopwatch& sw, RunReport& rep) {
  const auto& b = c.bound;
  const std::vector<Dims> dims = b.dims.empty() ? std::vector<Dims>{c.dims} : b.dims;
  const BoundReport br = sw.time("scan", [&] {
    switch (b.scan) {
      case ScanKind::BJ14: return certify_bj14(b.lambda0, b.trials, dims, c.seed);
      case ScanKind::Eps0: return estimate_eps0(b.v0, b.trials, dims, c.seed);
      case ScanKind::EpsT2: return estimate_eps_T2(b.Lambda, b.trials, dims, c.seed);
    }
    throw Error("unreachable scan kind");
  });
  std::ostringstream os;
  os << "n,m,samples,min_rayleigh,claimed_bound,margin,worst_lambdas\n";
  for (const auto& d : br.by_dims) {
    os << d.dims.n << ',' << d.dims.m << ',' << d.samples << ',' << fmt(d.min_rayleigh) << ','
       << fmt(br.claimed_bound) << ',' << fmt(d.min_rayleigh - br.claimed_bound) << ',';
    for (std::size_t k = 0; k < d.worst_profile.lambdas.size(); ++k) {
      if (k) os << ';';
      os << fmt(d.worst_profile.lambdas[k]);
    }
    os << '\n';
  }
  out.text("bound.csv", os.str());
  add_check(rep, br.label, br.passed, br.margin,
            "min Rayleigh quotient " + fmt(br.min_rayleigh) + " over " +
                std::to_string(br.samples) + " profiles, claimed " + fmt(br.claimed_bound));
}

void run_flow_command(const ExperimentConfig& c, Artifacts& out, Stopwatch& sw, RunReport& rep,
                      bool estimate) {
  const GraphPatch initial = sw.time("patch", [&] { return build_patch(c.patch, c.dims); });
  out.patch("initial.patch", initial);
  const FlowParams& params = c.flow;
  FlowConfig cfg = resolve_flow(params, initial);
  cfg.seed = c.seed;
  const FlowResult res = sw.time("flow", [&] { return run_flow(initial, cfg); });
  out.text("flow.csv", flow_csv(res.trace));
  out.patch("final.patch", res.final_patch);
  if (params.snapshots_jsonl) out.text("snapshots.jsonl", snapshots_jsonl(res.trace));

  const Verdict mp = monitor_max_principle(res.trace, cfg.v0);
  add_check(rep, "max_principle", mp.passed, std::nullopt, mp.message);

  if (!estimate) return;
  const auto& e = c.estimate;
  const EstimateTable table =
      sw.time("estimate", [&] { return estimate_check(res.trace, e.R_list, e.T_list); });
  std::ostringstream os;
  os << "R,T,sup_B,c_fit\n";
  for (const auto& entry : table.entries) {
    os << fmt(entry.R) << ',' << fmt(entry.T) << ',' << fmt(entry.sup_b) << ','
       << fmt(entry.c_fit) << '\n';
  }
  out.text("estimate.csv", os.str());
  add_check(rep, "scaling", table.passed(e.max_variation), e.max_variation - table.variation,
            "variation of max_R c_fit across T: " + fmt(table.variation) +
                (table.message.empty() ? "" : "; " + table.message));

  std::ostringstream rs;
  rs << "s,defect\n";
  double worst = 0.0;
  for (double s : e.rescale) {
    const double d = rescaling_defect(res.trace, e.R_list, e.T_list, s);
    worst = std::max(worst, d);
    rs << fmt(s) << ',' << fmt(d) << '\n';
  }
  out.text("rescale.csv", rs.str());
  add_check(rep, "rescaling_invariance", worst <= e.rescale_tol, e.rescale_tol - worst,
            "max relative c_fit change under parabolic rescaling: " + fmt(worst));
}

void run_soliton(const ExperimentConfig& c, Artifacts& out, Stopwatch& sw, RunReport& rep) {
  const auto& s = c.soliton;
  const GraphPatch patch = sw.time("patch", [&] { return build_patch(c.patch, c.dims); });
  out.patch("soliton.patch", patch);
  double eps_hat = 0.0;
  if (s.eps_hat) {
    eps_hat = *s.eps_hat;
  } else {
    const std::vector<Dims> dims{c.dims};
    eps_hat = sw.time("eps_hat", [&] {
      return estimate_eps_T2(s.Lambda, s.eps_trials, dims, c.seed).min_rayleigh;
    });
  }

  std::ostringstream ms;
  ms << "quantity,value\n";
  ms << "eps_hat," << fmt(eps_hat) << '\n';
  try {
    const InequalityReport ir = sw.time(
        "inequalities", [&] { return check_soliton_inequalities(patch, s.spec, eps_hat, s.inequality); });
    add_check(rep, "soliton_residual", true, std::nullopt, "max residual " + fmt(ir.residual_max));
    add_check(rep, "drift_inequality_v", ir.v_passed, ir.worst_v_margin + ir.slack,
              "worst margin " + fmt(ir.worst_v_margin) + ", slack " + fmt(ir.slack));
    add_check(rep, "drift_inequality_B", ir.b_passed, ir.worst_b_margin + ir.slack,
              "worst margin " + fmt(ir.worst_b_margin) + ", slack " + fmt(ir.slack));
    ms << "residual_max," << fmt(ir.residual_max) << '\n'
       << "slack," << fmt(ir.slack) << '\n'
       << "worst_v_margin," << fmt(ir.worst_v_margin) << '\n'
       << "worst_b_margin," << fmt(ir.worst_b_margin) << '\n'
       << "evaluated," << ir.evaluated << '\n';
  } catch (const NotASoliton& e) {
    add_check(rep, "soliton_residual", false, std::nullopt, e.what());
    ms << "residual_max," << fmt(e.residual()) << '\n';
  }

  const IdentityCheck id = sw.time("identity", [&] {
    return check_distance_identity(patch, s.spec, s.inequality.region, s.identity_c);
  });
  add_check(rep, "distance_identity", id.passed, id.tolerance - id.defect,
            "max defect " + fmt(id.defect) + ", tolerance " + fmt(id.tolerance));
  ms << "identity_defect," << fmt(id.defect) << '\n' << "identity_tolerance," << fmt(id.tolerance) << '\n';
  out.text("soliton.csv", ms.str());

  const SolitonBoundTable table = sw.time(
      "bound", [&] { return localized_soliton_bound(patch, s.spec, s.R_list, s.v0, s.Lambda); });
  std::ostringstream bs;
  bs << "R,sup_B2_half,max_f_tilde,ratio,window_truncated\n";
  for (const auto& row : table.rows) {
    bs << fmt(row.R) << ',' << fmt(row.sup_b2_half) << ',' << fmt(row.max_f_tilde) << ','
       << fmt(row.ratio) << ',' << row.window_truncated << '\n';
  }
  out.text("soliton_bound.csv", bs.str());
  rep.checks.back().detail += table.message.empty() ? "" : "; bound table: " + table.message;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = c.schema;
  j["command"] = to_string(c.command);
  j["seed"] = c.seed;
  j["dims"] = {{"n", c.dims.n}, {"m", c.dims.m}};
  if (c.output) j["output"] = *c.output;
  const auto used = sections_for(c.command);
  if (used.count("patch")) {
    const auto& p = c.patch;
    json pj;
    pj["recipe"] = p.recipe;
    if (p.recipe == "sine-product" || p.recipe == "saddle" || p.recipe == "sine-sum") {
      pj["amplitude"] = p.amplitude;
      pj["wavenumber"] = p.wavenumber;
      pj["nodes"] = p.nodes;
    } else if (p.recipe == "grim-reaper") {
      pj["delta"] = p.delta;
      pj["half_width"] = p.half_width;
      pj["nodes_x1"] = p.nodes_x1;
      pj["nodes_other"] = p.nodes_other;
    } else if (p.recipe == "sphere") {
      pj["radius"] = p.radius.value_or(std::sqrt(2.0 * c.dims.n));
      pj["half_width"] = p.half_width;
      pj["nodes"] = p.nodes;
    } else if (p.recipe == "affine") {
      json rows = json::array();
      for (int a = 0; a < p.slope.rows(); ++a) {
        json row = json::array();
        for (int i = 0; i < p.slope.cols(); ++i) row.push_back(p.slope(a, i));
        rows.push_back(row);
      }
      pj["slope"] = rows;
      pj["offset"] = std::vector<double>(p.offset.data(), p.offset.data() + p.offset.size());
      pj["lo"] = p.lo;
      pj["hi"] = p.hi;
      pj["grid"] = p.grid;
      pj["boundary"] = to_string(p.boundary);
    } else if (p.recipe == "file") {
      pj["path"] = p.path;
    }
    j["patch"] = pj;
  }
  if (used.count("grassmann")) j["grassmann"] = {{"trials", c.grassmann.trials}};
  if (used.count("bound")) {
    json dims = json::array();
    for (const auto& d : c.bound.dims) dims.push_back({d.n, d.m});
    j["bound"] = {{"scan", scan_name(c.bound.scan)}, {"lambda0", c.bound.lambda0},
                  {"v0", c.bound.v0},                {"Lambda", c.bound.Lambda},
                  {"trials", c.bound.trials},        {"dims", dims}};
  }
  if (used.count("flow")) {
    const auto& f = c.flow.flow;
    json fj = {{"dt", f.dt},
               {"scheme", to_string(f.scheme)},
               {"steps", f.steps},
               {"monitor_every", f.monitor_every},
               {"k", f.k},
               {"v0", f.v0},
               {"R", f.R},
               {"T", f.T},
               {"cfl", f.cfl},
               {"drift_correction", f.drift_correction},
               {"record_snapshots", f.record_snapshots},
               {"snapshots_jsonl", c.flow.snapshots_jsonl}};
    if (f.lambda0) fj["lambda0"] = *f.lambda0;
    if (c.flow.duration) fj["duration"] = *c.flow.duration;
    j["flow"] = fj;
  }
  if (used.count("estimate")) {
    const auto& e = c.estimate;
    j["estimate"] = {{"R", e.R_list},
                     {"T", e.T_list},
                     {"rescale", e.rescale},
                     {"max_variation", e.max_variation},
                     {"rescale_tol", e.rescale_tol}};
  }
  if (used.count("soliton")) {
    const auto& s = c.soliton;
    json sj = {{"kind", to_string(s.spec.kind)},
               {"k2", s.spec.k2},
               {"Lambda", s.Lambda},
               {"v0", s.v0},
               {"eps_trials", s.eps_trials},
               {"margin", s.inequality.region.margin},
               {"residual_c", s.inequality.residual_c},
               {"slack_c", s.inequality.slack_c},
               {"identity_c", s.identity_c},
               {"R", s.R_list}};
    if (s.spec.kind == SolitonKind::Translator) {
      sj["V0"] = std::vector<double>(s.spec.V0.data(), s.spec.V0.data() + s.spec.V0.size());
    }
    if (s.eps_hat) sj["eps_hat"] = *s.eps_hat;
    if (s.inequality.residual_tol) sj["residual_tol"] = *s.inequality.residual_tol;
    if (s.inequality.region.box_lo) sj["box_lo"] = *s.inequality.region.box_lo;
    if (s.inequality.region.box_hi) sj["box_hi"] = *s.inequality.region.box_hi;
    j["soliton"] = sj;
  }
  return j;
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [cmd, name] : command_table())
    if (cmd == c) return name;
  return "";
}

std::optional<Command> command_from_string(std::string_view s) {
  for (const auto& [cmd, name] : command_table())
    if (name == s) return cmd;
  return std::nullopt;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : command_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

GraphPatch build_patch(const PatchRecipe& p, Dims dims) {
  if (p.recipe == "affine") return recipes::affine(p.slope, p.offset, p.lo, p.hi, p.grid, p.boundary);
  if (p.recipe == "sine-product") return recipes::sine_product(dims.m, p.amplitude, p.wavenumber, p.nodes);
  if (p.recipe == "saddle") return recipes::saddle(dims.m, p.amplitude, p.wavenumber, p.nodes);
  if (p.recipe == "sine-sum") return recipes::sine_sum(dims.n, dims.m, p.amplitude, p.wavenumber, p.nodes);
  if (p.recipe == "grim-reaper") {
    return recipes::grim_reaper(dims.n, dims.m, p.delta, p.half_width, p.nodes_x1, p.nodes_other);
  }
  if (p.recipe == "sphere") {
    return recipes::sphere_graph(dims.n, dims.m, p.radius.value_or(std::sqrt(2.0 * dims.n)),
                                 p.half_width, p.nodes);
  }
  if (p.recipe == "file") {
    GraphPatch patch = load_patch(p.path);
    if (patch.n() != dims.n || patch.m() != dims.m) {
      throw DimensionError("patch file dimensions do not match the configured dims");
    }
    return patch;
  }
  throw DomainError("unknown patch recipe: " + p.recipe);
}

ExperimentConfig validate_config(std::string_view text) {
  struct OpenObject {
    std::set<std::string> keys;
    std::string last;
  };
  std::vector<OpenObject> open_objects;
  std::vector<std::string> errors;
  json root;
  try {
    json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
      switch (event) {
        case json::parse_event_t::object_start: open_objects.emplace_back(); break;
        case json::parse_event_t::object_end:
          if (!open_objects.empty()) open_objects.pop_back();
          break;
        case json::parse_event_t::key: {
          const auto key = parsed.get<std::string>();
          if (open_objects.empty()) break;
          auto& top = open_objects.back();
          top.last = key;
          if (!top.keys.insert(key).second) {
            std::string path;
            for (const auto& o : open_objects) path += (path.empty() ? "" : ".") + o.last;
            errors.push_back(path + ": duplicate key");
          }
          break;
        }
        default: break;
      }
      return true;
    };
    root = json::parse(text.begin(), text.end(), cb);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_object()) throw ValidationError({"config must be a JSON object"});

  ExperimentConfig c;
  Reader r(root, "", errors);
  if (!r.has("schema")) r.fail("schema", "required");
  c.schema = r.string("schema", kSchema);
  if (c.schema != kSchema) r.fail("schema", std::string("unsupported schema, expected ") + kSchema);
  if (!r.has("command")) r.fail("command", "required");
  const std::string cmd = r.string("command", to_string(c.command));
  if (auto parsed = command_from_string(cmd)) {
    c.command = *parsed;
  } else {
    r.fail("command", "unknown command '" + cmd + "'");
  }
  c.seed = r.unsigned_integer("seed", c.seed);
  c.dims = read_dims(r, "dims", c.dims, errors);
  if (r.has("output")) c.output = r.string("output", "");

  const auto used = sections_for(c.command);
  for (const auto& name : section_names()) {
    if (r.has(name) && !used.count(name)) {
      r.raw(name);
      r.fail(name, "section not used by command " + to_string(c.command));
    }
  }
  const bool grassmann_like = c.command == Command::GrassmannCheck || c.command == Command::BoundScan;
  if (grassmann_like && c.dims.m < c.dims.n) r.fail("dims", "requires m >= n");

  auto section = [&](const std::string& name, auto&& body) {
    if (!used.count(name)) return;
    static const json empty = json::object();
    const json* obj = r.object(name);
    Reader s(obj ? *obj : empty, name, errors);
    body(s);
    s.finish();
  };

  section("grassmann", [&](Reader& s) {
    const long long trials = s.integer("trials", static_cast<long long>(c.grassmann.trials));
    if (trials < 1) s.fail("trials", "must be >= 1");
    c.grassmann.trials = static_cast<std::size_t>(std::max(1LL, trials));
    if (c.dims.n < 2) r.fail("dims", "grassmann-check requires n >= 2");
  });

  section("bound", [&](Reader& s) {
    auto& b = c.bound;
    const std::string scan = s.string("scan", scan_name(b.scan));
    if (scan == "bj14") b.scan = ScanKind::BJ14;
    else if (scan == "eps0") b.scan = ScanKind::Eps0;
    else if (scan == "eps-T2") b.scan = ScanKind::EpsT2;
    else s.fail("scan", "must be bj14, eps0 or eps-T2");
    b.lambda0 = s.number("lambda0", b.lambda0);
    b.v0 = s.number("v0", b.v0);
    b.Lambda = s.number("Lambda", b.Lambda);
    const long long trials = s.integer("trials", static_cast<long long>(b.trials));
    if (trials < 1) s.fail("trials", "must be >= 1");
    b.trials = static_cast<std::size_t>(std::max(1LL, trials));
    if (const json* d = s.raw("dims")) {
      bool ok = d->is_array() && !d->empty();
      for (std::size_t k = 0; ok && k < d->size(); ++k) {
        const json& e = (*d)[k];
        ok = e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number_integer();
        if (!ok) break;
        Dims dd{e[0].get<int>(), e[1].get<int>()};
        if (!valid_dim(dd.n) || !valid_dim(dd.m) || dd.m < dd.n) {
          s.fail("dims", "each entry needs 1 <= n <= m <= 6");
        }
        b.dims.push_back(dd);
      }
      if (!ok) s.fail("dims", "expected a non-empty array of [n, m] pairs");
    }
    if (b.scan == ScanKind::BJ14) {
      if (!(b.lambda0 > 0.0)) s.fail("lambda0", "lambda0 must be > 0");
      if (!(b.lambda0 < 1.0)) s.fail("lambda0", "lambda0 must be < 1");
    } else if (b.scan == ScanKind::Eps0) {
      if (!(b.v0 >= 1.0)) s.fail("v0", "v0 must be >= 1");
    } else if (!(b.Lambda > 0.0 && b.Lambda < std::sqrt(2.0))) {
      s.fail("Lambda", "Lambda must lie in (0, sqrt 2)");
    }
  });

  section("patch", [&](Reader& s) { c.patch = read_patch(s, c.dims); });

  bool steps_given = false;
  section("flow", [&](Reader& s) {
    steps_given = read_flow(s, c.flow, c.command == Command::EstimateSweep);
  });

  section("estimate", [&](Reader& s) {
    auto& e = c.estimate;
    e.R_list = s.numbers("R", e.R_list);
    e.T_list = s.numbers("T", e.T_list);
    e.rescale = s.numbers("rescale", e.rescale);
    e.max_variation = s.number("max_variation", e.max_variation);
    e.rescale_tol = s.number("rescale_tol", e.rescale_tol);
    check_positive_list(s, "R", e.R_list);
    check_positive_list(s, "T", e.T_list);
    check_positive_list(s, "rescale", e.rescale);
    if (!(e.max_variation > 1.0)) s.fail("max_variation", "must be > 1");
    if (!(e.rescale_tol > 0.0)) s.fail("rescale_tol", "must be > 0");
  });

  section("soliton", [&](Reader& s) {
    auto& p = c.soliton;
    const std::string kind = s.string("kind", to_string(p.spec.kind));
    if (kind == "shrinker" || kind == "translator") {
      p.spec.kind = soliton_kind_from_string(kind);
    } else {
      s.fail("kind", "must be shrinker or translator");
    }
    const int ambient = c.dims.n + c.dims.m;
    if (p.spec.kind == SolitonKind::Translator) {
      std::vector<double> def(static_cast<std::size_t>(ambient), 0.0);
      def[static_cast<std::size_t>(c.dims.n)] = 1.0;
      const auto v0 = s.numbers("V0", def);
      if (static_cast<int>(v0.size()) != ambient) {
        s.fail("V0", "expected n + m entries");
      } else {
        p.spec.V0 = Eigen::Map<const Vector>(v0.data(), ambient);
        if (std::abs(p.spec.V0.norm() - 1.0) > 1e-12) s.fail("V0", "must be a unit vector");
      }
    } else if (s.has("V0")) {
      s.raw("V0");
      s.fail("V0", "only used by translators");
    }
    p.spec.k2 = s.number("k2", p.spec.k2);
    p.eps_hat = s.opt_number("eps_hat");
    p.Lambda = s.number("Lambda", p.Lambda);
    p.v0 = s.number("v0", p.v0);
    const long long trials = s.integer("eps_trials", static_cast<long long>(p.eps_trials));
    if (trials < 1) s.fail("eps_trials", "must be >= 1");
    p.eps_trials = static_cast<std::size_t>(std::max(1LL, trials));
    auto& reg = p.inequality.region;
    reg.margin = static_cast<int>(s.integer("margin", reg.margin));
    if (s.has("box_lo")) reg.box_lo = s.numbers("box_lo", {});
    if (s.has("box_hi")) reg.box_hi = s.numbers("box_hi", {});
    p.inequality.residual_tol = s.opt_number("residual_tol");
    p.inequality.residual_c = s.number("residual_c", p.inequality.residual_c);
    p.inequality.slack_c = s.number("slack_c", p.inequality.slack_c);
    p.identity_c = s.number("identity_c", p.identity_c);
    p.R_list = s.numbers("R", p.R_list);

    if (!(p.Lambda > 0.0 && p.Lambda < std::sqrt(2.0))) s.fail("Lambda", "must lie in (0, sqrt 2)");
    if (!(p.v0 >= 1.0)) s.fail("v0", "must be >= 1");
    if (!(p.spec.k2 >= 0.0)) s.fail("k2", "must be >= 0");
    if (reg.margin < 2) s.fail("margin", "must be >= 2");
    const auto un = static_cast<std::size_t>(c.dims.n);
    if (reg.box_lo && reg.box_lo->size() != un) s.fail("box_lo", "expected n entries");
    if (reg.box_hi && reg.box_hi->size() != un) s.fail("box_hi", "expected n entries");
    if (p.eps_hat && !std::isfinite(*p.eps_hat)) s.fail("eps_hat", "must be finite");
    if (p.inequality.residual_tol && !(*p.inequality.residual_tol > 0.0)) {
      s.fail("residual_tol", "must be > 0");
    }
    if (!(p.inequality.residual_c > 0.0)) s.fail("residual_c", "must be > 0");
    if (!(p.inequality.slack_c >= 0.0)) s.fail("slack_c", "must be >= 0");
    if (!(p.identity_c > 0.0)) s.fail("identity_c", "must be > 0");
    check_positive_list(s, "R", p.R_list);
    if (c.dims.m < c.dims.n) r.fail("dims", "soliton-check requires m >= n");
  });

  if (c.command == Command::EstimateSweep) {
    c.flow.flow.record_snapshots = true;
    // Default run length covers the largest time window.
    if (!steps_given && !c.flow.duration && !c.estimate.T_list.empty()) {
      c.flow.duration =
          1.03125 * *std::max_element(c.estimate.T_list.begin(), c.estimate.T_list.end());
    }
  }

  r.finish();
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

std::string config_json(const ExperimentConfig& config) { return config_to_json(config).dump(2); }

bool RunReport::passed() const {
  if (error) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

int RunReport::exit_code() const {
  if (error) return 3;
  return passed() ? 0 : 1;
}

RunReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  RunReport rep;
  rep.config = config;
  std::filesystem::create_directories(out_dir);
  Artifacts out(out_dir, rep);
  Stopwatch sw(rep);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (config.command) {
      case Command::GrassmannCheck: run_grassmann(config, out, sw, rep); break;
      case Command::BoundScan: run_bound(config, out, sw, rep); break;
      case Command::FlowRun: run_flow_command(config, out, sw, rep, false); break;
      case Command::EstimateSweep: run_flow_command(config, out, sw, rep, true); break;
      case Command::SolitonCheck: run_soliton(config, out, sw, rep); break;
    }
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  rep.timings.emplace_back("total",
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  std::ofstream os(out_dir / "report.json", std::ios::binary);
  if (!os) throw Error("cannot write " + (out_dir / "report.json").string());
  os << report_json(rep) << '\n';
  return rep;
}

std::string report_json(const RunReport& report) {
  json j;
  j["schema"] = "gaussflow-report/1";
  j["command"] = to_string(report.config.command);
  j["passed"] = report.passed();
  j["exit_code"] = report.exit_code();
  j["config"] = config_to_json(report.config);
  json checks = json::array();
  for (const auto& c : report.checks) {
    json cj = {{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}};
    cj["margin"] = c.margin ? finite_or_null(*c.margin) : json(nullptr);
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["files"] = report.files;
  json timings = json::object();
  for (const auto& [stage, seconds] : report.timings) timings[stage] = seconds;
  j["timings_seconds"] = timings;
  j["error"] = report.error ? json(*report.error) : json(nullptr);
  return j.dump(2);
}

}  // namespace gaussflow::experiment
