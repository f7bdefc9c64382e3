#include "glova/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "glova/error.hpp"
#include "glova/external_adapter.hpp"

#ifndef GLOVA_DEFAULT_BENCH_DIR
#define GLOVA_DEFAULT_BENCH_DIR "benches"
#endif

namespace glova {

using nlohmann::json;

std::vector<PerformanceVector> evaluate_batch(const Evaluator& evaluator,
                                              std::span<const EvalJob> jobs, std::size_t workers) {
    if (jobs.empty()) throw StructuralError("evaluate_batch needs at least one job");
    std::vector<PerformanceVector> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                results[i] = evaluator.evaluate(jobs[i].x, jobs[i].corner, jobs[i].condition);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, jobs.size());
    if (workers == 1) {
        run_range(0, jobs.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (jobs.size() + workers - 1) / workers;
        for (std::size_t begin = 0; begin < jobs.size(); begin += chunk)
            pool.emplace_back(run_range, begin, std::min(begin + chunk, jobs.size()));
    }

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const EvaluationError& e) {
            throw EvaluationError("job " + std::to_string(i) + ": " + e.what(), e.diagnostics());
        } catch (const std::exception& e) {
            throw EvaluationError("job " + std::to_string(i) + ": " + e.what());
        }
    }
    return results;
}

double FactorTable::at(double v) const {
    if (points.empty()) return 1.0;
    if (v <= points.front().first) return points.front().second;
    if (v >= points.back().first) return points.back().second;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& [x1, y1] = points[i];
        if (v <= x1) {
            const auto& [x0, y0] = points[i - 1];
            return y0 + (y1 - y0) * (v - x0) / (x1 - x0);
        }
    }
    return points.back().second;
}

SyntheticBench::SyntheticBench(DesignSpace space, ConstraintSet constraints,
                               std::vector<SyntheticMetric> metrics, std::size_t mismatch_dim)
    : space_(std::move(space)),
      constraints_(std::move(constraints)),
      metrics_(std::move(metrics)),
      mismatch_dim_(mismatch_dim) {
    if (metrics_.size() != constraints_.size())
        throw ConfigError("bench metric list and constraint list differ in length");
    for (const auto& m : metrics_) {
        if (m.terms.empty()) throw ConfigError("metric '" + m.name + "' has no terms");
        for (const auto& t : m.terms) {
            if (!(t.coefficient > 0.0))
                throw ConfigError("metric '" + m.name + "' has a nonpositive term coefficient");
            for (const auto& [idx, _] : t.exponents)
                if (idx >= space_.dimension())
                    throw ConfigError("metric '" + m.name + "' refers to a missing parameter");
        }
        if (m.sensitivity.size() != mismatch_dim_)
            throw ConfigError("metric '" + m.name + "' sensitivity vector has wrong length");
    }
}

std::vector<std::string> SyntheticBench::metric_names() const { return constraints_.names(); }

double SyntheticBench::base(std::size_t metric, std::span<const double> phys) const {
    double sum = 0.0;
    for (const auto& term : metrics_.at(metric).terms) {
        double v = term.coefficient;
        for (const auto& [idx, power] : term.exponents) v *= std::pow(phys[idx], power);
        sum += v;
    }
    return sum;
}

double SyntheticBench::corner_factor(std::size_t metric, const PvtCorner& t) const {
    const auto& m = metrics_.at(metric);
    double f = 1.0;
    const auto process = t.process == ProcessCorner::GLOBAL_MC ? ProcessCorner::TT : t.process;
    if (auto it = m.process_factor.find(process); it != m.process_factor.end()) f *= it->second;
    return f * m.voltage_factor.at(t.voltage) * m.temperature_factor.at(t.temperature);
}

std::vector<double> SyntheticBench::measure(const DesignVector& x, const PvtCorner& t,
                                            const MismatchCondition& h) const {
    if (h.h.size() != mismatch_dim_)
        throw StructuralError("mismatch vector has " + std::to_string(h.h.size()) +
                              " entries, bench expects " + std::to_string(mismatch_dim_));
    const auto phys = denormalize(x, space_);
    std::vector<double> out(metrics_.size());
    for (std::size_t i = 0; i < metrics_.size(); ++i) {
        double exponent = 0.0;
        for (std::size_t d = 0; d < mismatch_dim_; ++d) exponent += metrics_[i].sensitivity[d] * h.h[d];
        out[i] = base(i, phys) * corner_factor(i, t) * std::exp(exponent);
    }
    return out;
}

PerformanceVector SyntheticBench::evaluate(const DesignVector& x, const PvtCorner& t,
                                           const MismatchCondition& h) const {
    const auto natural = measure(x, t, h);
    return normalize_metrics(constraints_.fold(natural), constraints_);
}

// ---------------------------------------------------------------------------
// Bench definition files
// ---------------------------------------------------------------------------

namespace {

ParamKind parse_kind(const std::string& s) {
    if (s == "width") return ParamKind::width;
    if (s == "length") return ParamKind::length;
    if (s == "capacitance") return ParamKind::capacitance;
    throw ConfigError("unknown parameter kind '" + s + "'");
}

Direction parse_direction(const std::string& s) {
    if (s == "upper" || s == "upper_bound" || s == "max") return Direction::upper_bound;
    if (s == "lower" || s == "lower_bound" || s == "min") return Direction::lower_bound;
    throw ConfigError("unknown constraint direction '" + s + "'");
}

FactorTable parse_table(const json& j) {
    FactorTable t;
    for (const auto& p : j) t.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    std::sort(t.points.begin(), t.points.end());
    return t;
}

PvtCorner parse_corner(const json& j) {
    return {parse_process(j.at("process").get<std::string>()), j.at("voltage").get<double>(),
            j.at("temperature").get<double>()};
}

}  // namespace

Benchmark parse_benchmark(const json& doc) {
    try {
        Benchmark b;
        b.name = doc.value("name", "bench");

        std::vector<ParamSpec> params;
        for (const auto& p : doc.at("params")) {
            params.push_back({p.at("name").get<std::string>(), parse_kind(p.at("kind")),
                              p.at("min").get<double>(), p.at("max").get<double>(),
                              p.value("scale", "linear") == "log" ? ParamScale::log
                                                                  : ParamScale::linear});
        }
        b.space = DesignSpace(std::move(params));

        std::vector<MetricSpec> specs;
        for (const auto& m : doc.at("metrics"))
            specs.push_back({m.at("name").get<std::string>(), m.at("target").get<double>(),
                             parse_direction(m.value("direction", "upper"))});
        b.constraints = ConstraintSet(std::move(specs));

        std::map<std::string, std::size_t> device_index;
        for (const auto& d : doc.at("devices")) {
            device_index[d.at("name")] = b.variance.devices.size();
            b.variance.devices.push_back({d.at("name").get<std::string>(),
                                          b.space.index_of(d.at("width")),
                                          b.space.index_of(d.at("length"))});
        }
        std::map<std::string, std::size_t> dim_index;
        for (const auto& m : doc.at("mismatch")) {
            const std::string dev = m.at("device");
            if (!device_index.count(dev)) throw ConfigError("unknown device '" + dev + "'");
            dim_index[m.at("name")] = b.variance.dims.size();
            b.variance.dims.push_back(
                {m.at("name").get<std::string>(), device_index[dev], m.at("pelgrom").get<double>()});
            b.variance.global_sigmas.push_back(m.value("global_sigma", 0.0));
        }
        b.variance.validate(b.space);

        const auto& c = doc.at("corners");
        for (const auto& p : c.at("process")) b.corners.processes.push_back(parse_process(p));
        b.corners.voltages = c.at("voltage").get<std::vector<double>>();
        b.corners.temperatures = c.at("temperature").get<std::vector<double>>();
        b.typical = parse_corner(doc.at("typical"));

        if (doc.contains("external")) {
            b.evaluator = std::make_shared<ExternalAdapter>(
                parse_external_config(doc.at("external"), b.space, b.constraints, b.variance));
            return b;
        }

        std::vector<SyntheticMetric> metrics;
        for (const auto& m : doc.at("metrics")) {
            SyntheticMetric sm;
            sm.name = m.at("name");
            for (const auto& t : m.at("terms")) {
                MonomialTerm term;
                term.coefficient = t.at("coef").get<double>();
                const json exps = t.value("exponents", json::object());
                for (const auto& [pname, power] : exps.items())
                    term.exponents.emplace_back(b.space.index_of(pname), power.get<double>());
                sm.terms.push_back(std::move(term));
            }
            const json procs = m.value("process", json::object());
            for (const auto& [pname, f] : procs.items())
                sm.process_factor[parse_process(pname)] = f.get<double>();
            sm.voltage_factor = parse_table(m.value("voltage", json::array()));
            sm.temperature_factor = parse_table(m.value("temperature", json::array()));
            sm.sensitivity.assign(b.variance.dimension(), 0.0);
            const json sens = m.value("sensitivity", json::object());
            for (const auto& [dname, a] : sens.items()) {
                if (!dim_index.count(dname)) throw ConfigError("unknown mismatch dim '" + dname + "'");
                sm.sensitivity[dim_index[dname]] = a.get<double>();
            }
            metrics.push_back(std::move(sm));
        }
        auto synth = std::make_shared<SyntheticBench>(b.space, b.constraints, std::move(metrics),
                                                      b.variance.dimension());
        b.synthetic = synth;
        b.evaluator = synth;
        return b;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed bench definition: ") + e.what());
    }
}

Benchmark load_benchmark(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open bench definition " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_benchmark(doc);
}

std::filesystem::path bench_directory() {
    if (const char* env = std::getenv("GLOVA_BENCH_DIR")) return env;
    return GLOVA_DEFAULT_BENCH_DIR;
}

Benchmark resolve_benchmark(const std::string& name_or_path) {
    std::filesystem::path p(name_or_path);
    if (std::filesystem::exists(p)) return load_benchmark(p);
    auto shipped = bench_directory() / (name_or_path + ".json");
    if (std::filesystem::exists(shipped)) return load_benchmark(shipped);
    throw ConfigError("cannot resolve bench '" + name_or_path + "'");
}

}  // namespace glova
