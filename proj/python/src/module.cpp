#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gaussflow/errors.hpp"
#include "gaussflow/experiment.hpp"
#include "gaussflow/flow.hpp"
#include "gaussflow/grassmann.hpp"
#include "gaussflow/quadform.hpp"
#include "gaussflow/recipes.hpp"
#include "gaussflow/soliton.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
namespace gf = gaussflow;

namespace {

gf::ShapeTensor tensor_from(int n, int m, const std::vector<double>& coords) {
  gf::ShapeTensor h(n, m);
  if (coords.size() != h.dof()) throw gf::DimensionError("shape tensor needs m * n(n+1)/2 coordinates");
  for (std::size_t k = 0; k < coords.size(); ++k) h.coord(k) = coords[k];
  return h;
}

py::dict bound_dict(const gf::BoundReport& r) {
  return py::dict("label"_a = r.label, "threshold"_a = r.threshold, "samples"_a = r.samples,
                  "min_rayleigh"_a = r.min_rayleigh, "claimed_bound"_a = r.claimed_bound,
                  "margin"_a = r.margin, "worst_lambdas"_a = r.worst_profile.lambdas,
                  "passed"_a = r.passed);
}

std::vector<gf::Dims> dims_from(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<gf::Dims> out;
  for (auto [n, m] : pairs) out.push_back({n, m});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grassmannian Gauss-map and mean curvature flow laboratory";

  auto base = py::register_exception<gf::Error>(m, "Error");
  py::register_exception<gf::DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<gf::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<gf::DegeneratePlane>(m, "DegeneratePlane", base.ptr());
  py::register_exception<gf::StencilError>(m, "StencilError", base.ptr());
  py::register_exception<gf::CapError>(m, "CapError", base.ptr());
  py::register_exception<gf::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<gf::ValidationError>(m, "ValidationError", base.ptr());

  m.def("w_pairing", [](const gf::Matrix& a, const gf::Matrix& b) {
    return gf::w_pairing(gf::orthonormalize(a), gf::orthonormalize(b));
  }, "a"_a, "b"_a, "det of the basis pairing after orthonormalizing both column sets");

  m.def("jordan_angles", [](const gf::Matrix& a, const gf::Matrix& b) {
    return gf::jordan_spectrum(gf::orthonormalize(a), gf::orthonormalize(b)).thetas;
  }, "a"_a, "b"_a);

  m.def("slope_v", [](const gf::Matrix& a) {
    const gf::Plane p = gf::orthonormalize(a);
    return gf::slope_v(p, gf::reference_plane(p.n(), p.m()));
  }, "a"_a, "v of the column span against the first n coordinate axes");

  m.def("q_logv", [](const std::vector<double>& lambdas, int m, const std::vector<double>& h) {
    const int n = static_cast<int>(lambdas.size());
    return gf::q_logv({n, m, lambdas}, tensor_from(n, m, h));
  }, "lambdas"_a, "m"_a, "h"_a);

  m.def("q_v", [](const std::vector<double>& lambdas, int m, const std::vector<double>& h) {
    const int n = static_cast<int>(lambdas.size());
    return gf::q_v({n, m, lambdas}, tensor_from(n, m, h));
  }, "lambdas"_a, "m"_a, "h"_a);

  m.def("rayleigh_min", [](const std::vector<double>& lambdas, int m, const std::string& form) {
    if (form != "logv" && form != "v") throw gf::DomainError("form must be 'logv' or 'v'");
    const int n = static_cast<int>(lambdas.size());
    return gf::rayleigh_min({n, m, lambdas}, form == "logv" ? gf::Form::LogV : gf::Form::V);
  }, "lambdas"_a, "m"_a, "form"_a = "logv");

  m.def("certify_bj14", [](double lambda0, std::size_t trials,
                           const std::vector<std::pair<int, int>>& dims, std::uint64_t seed) {
    return bound_dict(gf::certify_bj14(lambda0, trials, dims_from(dims), seed));
  }, "lambda0"_a, "trials"_a = 1000, "dims"_a = std::vector<std::pair<int, int>>{{2, 2}}, "seed"_a = 0);

  m.def("estimate_eps0", [](double v0, std::size_t trials,
                            const std::vector<std::pair<int, int>>& dims, std::uint64_t seed) {
    return bound_dict(gf::estimate_eps0(v0, trials, dims_from(dims), seed));
  }, "v0"_a, "trials"_a = 1000, "dims"_a = std::vector<std::pair<int, int>>{{2, 2}}, "seed"_a = 0);

  m.def("estimate_eps_T2", [](double Lambda, std::size_t trials,
                              const std::vector<std::pair<int, int>>& dims, std::uint64_t seed) {
    return bound_dict(gf::estimate_eps_T2(Lambda, trials, dims_from(dims), seed));
  }, "Lambda"_a, "trials"_a = 1000, "dims"_a = std::vector<std::pair<int, int>>{{2, 2}}, "seed"_a = 0);

  m.def("grim_reaper_residual", [](int nodes, double delta) {
    const gf::GraphPatch p = gf::recipes::grim_reaper(2, 2, delta, 1.0, nodes, nodes);
    const gf::SolitonSpec spec{gf::SolitonKind::Translator, gf::recipes::grim_reaper_velocity(2, 2), 1.0};
    return gf::soliton_residual_max(p, spec, gf::EvaluationRegion{});
  }, "nodes"_a, "delta"_a = 0.2, "max translator residual of the grim reaper patch");

  m.def("validate_config", [](const std::string& text) {
    return gf::experiment::config_json(gf::experiment::validate_config(text));
  }, "text"_a, "canonical JSON of a validated config");

  m.def("run_experiment", [](const std::string& text, const std::string& out_dir) {
    const auto config = gf::experiment::validate_config(text);
    gf::experiment::RunReport report;
    {
      py::gil_scoped_release release;
      report = gf::experiment::run_experiment(config, out_dir);
    }
    return py::make_tuple(report.exit_code(), gf::experiment::report_json(report));
  }, "text"_a, "out_dir"_a, "runs a config; returns (exit code, report JSON)");

  m.attr("__version__") = "0.1.0";
}
