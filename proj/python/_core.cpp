// SPDX-License-Identifier: Apache-2.0
// Python bindings: curves, simulation, estimation, identification and scenarios.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>
#include <vector>

#include "lfpsoc/errors.hpp"
#include "lfpsoc/scenario.hpp"

namespace py = pybind11;
using namespace lfp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const std::vector<double>& v)
{
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> to_vector(const Array& a)
{
    auto r = a.unchecked<1>();
    std::vector<double> out(static_cast<std::size_t>(r.shape(0)));
    for (py::ssize_t i = 0; i < r.shape(0); ++i)
        out[static_cast<std::size_t>(i)] = r(i);
    return out;
}

std::string value_text(const py::handle& v)
{
    if (py::isinstance<py::bool_>(v))
        return v.cast<bool>() ? "true" : "false";
    if (py::isinstance<py::float_>(v))
        return py::repr(v).cast<std::string>();
    return py::str(v).cast<std::string>();
}

// Unknown keys are an error here; a typo would otherwise silently use a default.
ScenarioConfig config_from(const py::dict& d)
{
    Config c;
    for (auto item : d)
        c.set(py::str(item.first).cast<std::string>(), value_text(item.second));
    ScenarioConfig s = ScenarioConfig::from_config(c);
    auto unused = c.unused_keys();
    if (!unused.empty())
        throw ConfigError("unknown config key '" + unused.front() + "'");
    return s;
}

Trace trace_from(const Array& t, const Array& current, const Array& voltage)
{
    auto tv = to_vector(t), iv = to_vector(current), uv = to_vector(voltage);
    if (tv.size() != iv.size() || tv.size() != uv.size())
        throw InvalidInput("t, current and voltage must have the same length");
    if (tv.size() < 2)
        throw InvalidInput("a trace needs at least two samples");
    Trace tr;
    tr.dt = tv[1] - tv[0];
    tr.has_truth = false;
    for (std::size_t k = 0; k < tv.size(); ++k)
        tr.samples.push_back({tv[k], iv[k], uv[k], std::nan(""), std::nan("")});
    tr.validate();
    return tr;
}

py::dict trace_dict(const Trace& tr)
{
    std::vector<double> t, up;
    for (const auto& s : tr.samples) {
        t.push_back(s.t);
        up.push_back(s.true_up);
    }
    py::dict d;
    d["t"] = to_array(t);
    d["current"] = to_array(tr.currents());
    d["voltage"] = to_array(tr.voltages());
    d["true_soc"] = to_array(tr.true_socs());
    d["true_up"] = to_array(up);
    return d;
}

py::dict metrics_dict(const Metrics& m)
{
    py::dict d;
    d["rmse"] = m.rmse;
    d["mae"] = m.mae;
    d["max_abs_error"] = m.max_abs_error;
    d["convergence_time_s"] = m.convergence_time_s ? py::cast(*m.convergence_time_s) : py::none();
    d["final_quarter_rmse"] = m.final_quarter_rmse;
    return d;
}

py::dict ammkf_dict(const AmmkfResult& r)
{
    std::vector<double> ps, po, pi, ccm, opt;
    for (const auto& p : r.osc_points) {
        ps.push_back(p.soc);
        po.push_back(p.ocv);
        pi.push_back(static_cast<double>(p.interval));
    }
    for (const auto& d : r.diagnostics) {
        ccm.push_back(d.ccm);
        opt.push_back(static_cast<double>(d.optimal_index));
    }
    py::dict d;
    d["soc"] = to_array(r.soc);
    d["up"] = to_array(r.up);
    d["innovation"] = to_array(r.innovation);
    d["osc_soc"] = to_array(ps);
    d["osc_ocv"] = to_array(po);
    d["osc_interval"] = to_array(pi);
    d["interval_ccm"] = to_array(ccm);
    d["optimal_index"] = to_array(opt);
    d["handoff_step"] = r.handoff_step ? py::cast(*r.handoff_step) : py::none();
    return d;
}

py::dict ekf_dict(const std::vector<StepOutput>& out)
{
    std::vector<double> soc, up, innov, var;
    for (const auto& o : out) {
        soc.push_back(o.posterior.x.soc);
        up.push_back(o.posterior.x.up);
        innov.push_back(o.innovation);
        var.push_back(o.innovation_variance);
    }
    py::dict d;
    d["soc"] = to_array(soc);
    d["up"] = to_array(up);
    d["innovation"] = to_array(innov);
    d["innovation_variance"] = to_array(var);
    return d;
}

std::shared_ptr<const OscCurve> curve_from(const Array& soc, const Array& ocv)
{
    auto s = to_vector(soc), v = to_vector(ocv);
    if (s.size() != v.size())
        throw InvalidInput("soc and ocv must have the same length");
    std::vector<OcvKnot> knots;
    for (std::size_t i = 0; i < s.size(); ++i)
        knots.push_back({s[i], v[i]});
    return std::make_shared<const OscCurve>(std::move(knots));
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "LiFePO4 SOC estimation: ECM simulation, EKF, multi-model bank, online identification";

    py::register_exception<Error>(m, "LfpsocError", PyExc_ValueError);

    py::class_<OscCurve, std::shared_ptr<OscCurve>>(m, "Curve", "Piecewise-linear OCV-SOC curve")
        .def(py::init([](const Array& soc, const Array& ocv) {
                 return std::const_pointer_cast<OscCurve>(curve_from(soc, ocv));
             }),
             py::arg("soc"), py::arg("ocv"))
        .def("ocv", py::vectorize(&OscCurve::ocv), py::arg("soc"))
        .def("slope", py::vectorize(&OscCurve::slope), py::arg("soc"))
        .def_property_readonly("soc_knots",
                               [](const OscCurve& c) {
                                   std::vector<double> v;
                                   for (const auto& k : c.knots())
                                       v.push_back(k.soc);
                                   return to_array(v);
                               })
        .def_property_readonly("ocv_knots",
                               [](const OscCurve& c) {
                                   std::vector<double> v;
                                   for (const auto& k : c.knots())
                                       v.push_back(k.ocv);
                                   return to_array(v);
                               })
        .def_property_readonly("warnings", &OscCurve::warnings);

    m.def("reference_curve", [] { return std::make_shared<OscCurve>(reference_lfp_curve()); },
          "Built-in synthetic LiFePO4 curve");
    m.def("load_curve", [](const std::filesystem::path& path) {
              return std::const_pointer_cast<OscCurve>(load_curve(path.string()));
          },
          py::arg("path"), "Read a soc,ocv_v CSV");

    m.def(
        "simulate",
        [](const py::dict& config) {
            ScenarioConfig cfg = config_from(config);
            std::vector<std::string> warnings;
            Trace tr;
            {
                py::gil_scoped_release nogil;
                auto curves = make_curves(cfg);
                tr = make_trace(cfg, *curves.truth, warnings);
            }
            py::dict d = trace_dict(tr);
            d["warnings"] = warnings;
            return d;
        },
        py::arg("config") = py::dict(), "Simulate the configured profile; returns arrays keyed by column");

    m.def(
        "estimate",
        [](const Array& t, const Array& current, const Array& voltage, std::shared_ptr<OscCurve> curve,
           double initial_soc, const std::string& method, const py::dict& config) {
            if (method != "ekf" && method != "ammkf")
                throw InvalidInput("method must be 'ekf' or 'ammkf'");
            ScenarioConfig cfg = config_from(config);
            Trace tr = trace_from(t, current, voltage);
            SimConfig sim = cfg.sim;
            sim.dt = tr.dt;
            KfState init = initial_filter_state(cfg, curve);
            init.x.soc = initial_soc;
            std::vector<EcmParams> params{cfg.ecm};
            if (method == "ekf") {
                std::vector<StepOutput> out;
                {
                    py::gil_scoped_release nogil;
                    out = run_ekf(init, params, tr, sim);
                }
                return ekf_dict(out);
            }
            cfg.bank.validate();
            AmmkfResult res;
            {
                py::gil_scoped_release nogil;
                res = run_ammkf(tr, init, params, cfg.bank, sim);
            }
            return ammkf_dict(res);
        },
        py::arg("t"), py::arg("current"), py::arg("voltage"), py::arg("curve"), py::arg("initial_soc"),
        py::arg("method") = "ekf", py::arg("config") = py::dict(),
        "SOC estimate over a measured trace (current positive on discharge)");

    m.def(
        "identify",
        [](const Array& t, const Array& current, const Array& voltage, const py::dict& config) {
            ScenarioConfig cfg = config_from(config);
            Trace tr = trace_from(t, current, voltage);
            auto est = identify_stream(tr, {}, cfg.arls);
            std::vector<double> tt, r0, rp, cp, lam;
            for (const auto& e : est) {
                tt.push_back(e.t);
                r0.push_back(e.params.r0);
                rp.push_back(e.params.rp);
                cp.push_back(e.params.cp);
                lam.push_back(e.lambda);
            }
            py::dict d;
            d["t"] = to_array(tt);
            d["r0"] = to_array(r0);
            d["rp"] = to_array(rp);
            d["cp"] = to_array(cp);
            d["lambda"] = to_array(lam);
            d["unidentifiable"] = !est.empty() && est.back().unidentifiable;
            return d;
        },
        py::arg("t"), py::arg("current"), py::arg("voltage"), py::arg("config") = py::dict(),
        "Online first-order circuit identification");

    m.def(
        "run_scenario",
        [](const py::dict& config) {
            ScenarioConfig cfg = config_from(config);
            ScenarioResult r;
            {
                py::gil_scoped_release nogil;
                r = run_scenario(cfg);
            }
            py::dict d;
            d["trace"] = trace_dict(r.trace);
            d["ekf"] = ekf_dict(r.ekf);
            d["ammkf"] = ammkf_dict(r.ammkf);
            d["ekf_metrics"] = metrics_dict(r.ekf_metrics);
            d["ammkf_metrics"] = metrics_dict(r.ammkf_metrics);
            py::dict osc;
            osc["corrected_mae"] = r.osc.corrected_mae;
            osc["original_mae"] = r.osc.original_mae;
            osc["points"] = r.osc.points;
            d["osc"] = osc;
            d["violations"] = r.violations;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("config") = py::dict(), "Simulate, run both estimators and score them");

    m.def(
        "metrics",
        [](const Array& est, const Array& truth, double dt) {
            auto e = to_vector(est), t = to_vector(truth);
            return metrics_dict(compute_metrics(e, t, dt));
        },
        py::arg("estimate"), py::arg("truth"), py::arg("dt") = 1.0, "RMSE, MAE, max error, convergence time");

    m.def(
        "load_config",
        [](const std::filesystem::path& path) {
            const Config c = Config::load(path);
            py::dict d;
            for (const auto& [k, v] : c.entries())
                d[py::str(k)] = v;
            return d;
        },
        py::arg("path"), "Read a flat key = value file into a dict");

    m.def(
        "config_text", [](const py::dict& config) { return config_from(config).to_text(); },
        py::arg("config") = py::dict(), "Effective configuration as key = value text");
}
