#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jadce/harness.hpp"

namespace py = pybind11;
using namespace jadce;

namespace {

py::dict detection_dict(const DetectionResult& r) {
  py::dict d;
  d["estimate"] = r.estimate;
  d["scores"] = r.row_scores;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["seconds"] = r.seconds;
  return d;
}

py::object optional_float(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clustered activity detection and channel estimation";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DivergenceError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  m.def("hadamard_basis", &hadamard_basis, py::arg("length"));
  m.def("mutual_coherence", &mutual_coherence, py::arg("pilots"));

  m.def(
      "build_pilot_bank",
      [](Index length, std::vector<Index> sizes, Index cardinality, Index pool_factor,
         std::uint64_t seed) {
        PilotBankConfig c;
        c.length = length;
        c.cluster_sizes = std::move(sizes);
        c.cardinality = cardinality;
        c.pool_factor = pool_factor;
        c.seed = seed;
        const PilotBank b = build_pilot_bank(c);
        py::dict d;
        d["pilots"] = b.pilots;
        d["kappa"] = b.basis.kappa;
        d["cluster_offsets"] = b.cluster_offsets;
        d["cluster_sizes"] = b.cluster_sizes;
        d["cardinality"] = b.cardinality;
        d["phase_order"] = b.phase_order;
        return d;
      },
      py::arg("length"), py::arg("cluster_sizes"), py::arg("cardinality") = 0,
      py::arg("pool_factor") = 20, py::arg("seed") = 1);

  m.def(
      "nmse",
      [](const CMatrix& truth, const CMatrix& estimate, std::vector<Index> active) {
        return optional_float(nmse(truth, estimate, active));
      },
      py::arg("truth"), py::arg("estimate"), py::arg("active"));

  m.def(
      "calibrate_threshold",
      [](std::vector<double> scores, double target_pfa) {
        const Threshold t = calibrate_threshold(std::move(scores), target_pfa);
        return py::make_tuple(t.zeta, t.reliable, t.warning);
      },
      py::arg("null_scores"), py::arg("target_pfa"));

  m.def(
      "detect_and_pmd",
      [](std::vector<std::uint8_t> truth, const RVector& scores, double zeta) {
        const DetectionOutcome o = detect_and_pmd(truth, scores, zeta);
        py::dict d;
        d["detected"] = o.detected;
        d["pmd"] = optional_float(o.pmd);
        d["pfa"] = optional_float(o.pfa);
        d["misses"] = o.misses;
        d["false_alarms"] = o.false_alarms;
        return d;
      },
      py::arg("truth"), py::arg("scores"), py::arg("zeta"));

  m.def(
      "cb_somp",
      [](const CMatrix& y, const CMatrix& s, double tolerance, Index max_support) {
        SompOptions o;
        o.tolerance = tolerance;
        o.max_support = max_support;
        return detection_dict(cb_somp(y, s, o));
      },
      py::arg("received"), py::arg("pilots"), py::arg("tolerance") = 1e-4,
      py::arg("max_support") = 0);

  m.def(
      "sbl",
      [](const CMatrix& y, const CMatrix& s, double noise_power, double tolerance,
         Index max_iter) {
        SblOptions o;
        o.tolerance = tolerance;
        o.max_iter = max_iter;
        return detection_dict(
            aem_sbl(y, s, identity_calibration(s.rows(), y.cols(), noise_power), o));
      },
      py::arg("received"), py::arg("pilots"), py::arg("noise_power") = 1.0,
      py::arg("tolerance") = 1e-4, py::arg("max_iter") = 1000);

  m.def(
      "admm",
      [](const CMatrix& y, const CMatrix& s, double lambda, double rho, double tolerance,
         Index max_iter) {
        AdmmOptions o;
        o.lambda = lambda;
        o.rho = rho;
        o.tolerance = tolerance;
        o.max_iter = max_iter;
        return detection_dict(aem_admm(y, s, identity_calibration(s.rows(), y.cols(), 1.0), o));
      },
      py::arg("received"), py::arg("pilots"), py::arg("lam") = 1.0, py::arg("rho") = 1.0,
      py::arg("tolerance") = 1e-4, py::arg("max_iter") = 2000);

  m.def(
      "rip_diagnostic",
      [](const CMatrix& s, Index support, Index samples, std::uint64_t seed) {
        const RipStats r = rip_diagnostic(s, support, samples, seed);
        py::dict d;
        d["min_singular"] = r.min_singular;
        d["max_singular"] = r.max_singular;
        d["mean_min_singular"] = r.mean_min_singular;
        d["mean_max_singular"] = r.mean_max_singular;
        d["delta_lower"] = r.delta_lower;
        d["delta_upper"] = r.delta_upper;
        return d;
      },
      py::arg("pilots"), py::arg("support"), py::arg("samples") = 1000, py::arg("seed") = 1);

  m.def(
      "config_echo", [](const std::string& text) { return parse_config(text).echo(); },
      py::arg("text"), "Effective settings of a key = value config, in canonical order.");

  m.def(
      "run_experiment",
      [](const std::string& text) {
        const ExperimentConfig c = parse_config(text);
        ResultsTable t;
        {
          py::gil_scoped_release release;
          t = run_experiment(c);
        }
        py::list rows;
        for (const MetricSample& s : t.rows) {
          py::dict d;
          d["algorithm"] = s.algorithm;
          d["sweep_name"] = s.sweep_name;
          d["sweep_value"] = s.sweep_value;
          d["trial"] = s.trial;
          d["nmse"] = optional_float(s.nmse);
          d["pmd"] = optional_float(s.pmd);
          d["pfa"] = optional_float(s.pfa);
          d["runtime_s"] = s.runtime;
          d["iterations"] = s.iterations;
          d["skipped"] = s.skipped;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["warnings"] = t.warnings;
        out["echo"] = t.config_echo;
        return out;
      },
      py::arg("config_text"),
      "Run a sweep described by config text; returns per-trial rows and warnings.");
}
