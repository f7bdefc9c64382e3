#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "glova/bench.hpp"
#include "glova/error.hpp"
#include "glova/orchestrator.hpp"
#include "glova/verify.hpp"

namespace py = pybind11;
using namespace glova;
using nlohmann::json;

namespace {

PvtCorner corner_from(const std::string& process, double voltage, double temperature) {
    return {parse_process(process), voltage, temperature};
}

MismatchCondition condition_from(const Benchmark& b, std::optional<std::vector<double>> h) {
    const std::size_t r = b.variance.dimension();
    MismatchCondition c{h.value_or(std::vector<double>(r, 0.0)), std::vector<double>(r, 0.0)};
    if (c.h.size() != r)
        throw StructuralError("mismatch vector has " + std::to_string(c.h.size()) + " values, bench expects " +
                              std::to_string(r));
    return c;
}

RunConfig config_from(const std::string& text) { return parse_run_config(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_glova, m) {
    m.doc() = "Variation-aware analog sizing core";

    // later registrations are tried first, so the base type goes first
    auto& base = py::register_exception<Error>(m, "GlovaError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
    py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const json::exception& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });

    m.def("normalize_metric", &normalize_metric, py::arg("target"), py::arg("raw"));
    m.def("reward", [](const std::vector<double>& f) { return reward(f).value; }, py::arg("normalized"));
    m.def("risk_bound", [](const std::vector<double>& y, double beta1) { return risk_bound(y, beta1); },
          py::arg("outputs"), py::arg("beta1") = -3.0);
    m.attr("SUCCESS_REWARD") = kSuccessReward;

    m.def("sample_mismatch",
          [](const std::vector<double>& local, const std::vector<double>& global, std::size_t n,
             const std::string& mode, std::uint64_t seed) {
              RngStream rng(seed, "python-sample");
              std::vector<std::vector<double>> out;
              for (auto& c : sample_mismatch_set(local, global, n, parse_method(mode), rng))
                  out.push_back(std::move(c.h));
              return out;
          },
          py::arg("local_sigma"), py::arg("global_sigma"), py::arg("n"), py::arg("mode") = "CMCGL",
          py::arg("seed") = 0);

    m.def("pearson_profile",
          [](const std::vector<std::vector<double>>& h, const std::vector<std::vector<double>>& f) {
              std::vector<MismatchCondition> conds;
              std::vector<PerformanceVector> res;
              for (const auto& v : h) conds.push_back({v, std::vector<double>(v.size(), 0.0)});
              for (const auto& v : f) res.push_back({std::vector<double>(v.size(), 0.0), v});
              return pearson_profile(conds, res).rho;
          },
          py::arg("h"), py::arg("normalized"));
    m.def("h_score", [](const std::vector<double>& h, const std::vector<double>& rho) {
        return h_score(h, CorrelationProfile{rho});
    }, py::arg("h"), py::arg("rho"));

    py::class_<Benchmark>(m, "Bench")
        .def_readonly("name", &Benchmark::name)
        .def_property_readonly("parameters", [](const Benchmark& b) {
            std::vector<std::string> n;
            for (const auto& p : b.space.params()) n.push_back(p.name);
            return n;
        })
        .def_property_readonly("metrics", [](const Benchmark& b) { return b.constraints.names(); })
        .def_property_readonly("targets", [](const Benchmark& b) {
            std::vector<double> t;
            for (const auto& s : b.constraints.metrics()) t.push_back(s.target);
            return t;
        })
        .def_property_readonly("mismatch_dimension", [](const Benchmark& b) { return b.variance.dimension(); })
        .def("corners", [](const Benchmark& b, const std::string& mode) {
            std::vector<std::string> labels;
            for (const auto& c : enumerate_corners(parse_method(mode), b.corners)) labels.push_back(c.label());
            return labels;
        }, py::arg("mode") = "C")
        .def("physical", [](const Benchmark& b, const std::vector<double>& x) {
            return denormalize(DesignVector(x), b.space);
        }, py::arg("x"))
        .def("local_sigma", [](const Benchmark& b, const std::vector<double>& x) {
            return local_sigma(DesignVector(x), b.space, b.variance);
        }, py::arg("x"))
        .def("evaluate",
             [](const Benchmark& b, const std::vector<double>& x, const std::string& process, double voltage,
                double temperature, std::optional<std::vector<double>> h) {
                 const auto p = b.evaluator->evaluate(DesignVector(x), corner_from(process, voltage, temperature),
                                                      condition_from(b, h));
                 py::dict d;
                 d["raw"] = p.raw;
                 d["normalized"] = p.normalized;
                 d["reward"] = reward(p).value;
                 return d;
             },
             py::arg("x"), py::arg("process") = "TT", py::arg("voltage") = 0.9, py::arg("temperature") = 27.0,
             py::arg("h") = py::none());

    m.def("load_bench", &resolve_benchmark, py::arg("name_or_path"));
    m.def("bench_directory", &bench_directory);

    m.def("_run", [](const std::string& cfg) {
        py::gil_scoped_release release;
        const auto c = config_from(cfg);
        const auto bench = resolve_benchmark(c.bench);
        return run(c, bench).report.to_json(bench, c).dump();
    });
    m.def("_campaign", [](const std::string& cfg, const std::string& seeds) {
        py::gil_scoped_release release;
        return run_campaign(config_from(cfg), parse_seed_range(seeds)).to_json().dump();
    });
    m.def("_verify", [](const std::string& cfg, const std::vector<double>& x) {
        py::gil_scoped_release release;
        const auto c = config_from(cfg);
        const auto bench = resolve_benchmark(c.bench);
        const auto o = verify_design(c, bench, DesignVector(x));
        return to_json(o, enumerate_corners(c.method, c.corners.value_or(bench.corners))).dump();
    });
}
