#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "glova/core.hpp"
#include "glova/variation.hpp"

namespace glova {

/// F(x | t, h). Implementations must be deterministic and safe to call
/// concurrently.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual PerformanceVector evaluate(const DesignVector& x, const PvtCorner& t,
                                       const MismatchCondition& h) const = 0;
    virtual std::vector<std::string> metric_names() const = 0;
    virtual std::size_t mismatch_dimension() const = 0;
};

/// Wraps an evaluator and counts invocations, for simulation accounting.
class CountingEvaluator final : public Evaluator {
public:
    explicit CountingEvaluator(std::shared_ptr<const Evaluator> inner) : inner_(std::move(inner)) {}

    PerformanceVector evaluate(const DesignVector& x, const PvtCorner& t,
                               const MismatchCondition& h) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->evaluate(x, t, h);
    }
    std::vector<std::string> metric_names() const override { return inner_->metric_names(); }
    std::size_t mismatch_dimension() const override { return inner_->mismatch_dimension(); }

    std::uint64_t calls() const noexcept { return calls_.load(); }
    void reset() noexcept { calls_ = 0; }

private:
    std::shared_ptr<const Evaluator> inner_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

struct EvalJob {
    DesignVector x;
    PvtCorner corner;
    MismatchCondition condition;
};

/// Ordered results; up to `workers` threads. Errors are rethrown as
/// EvaluationError tagged with the lowest failing job index.
std::vector<PerformanceVector> evaluate_batch(const Evaluator& evaluator,
                                              std::span<const EvalJob> jobs,
                                              std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Synthetic posynomial testbench
// ---------------------------------------------------------------------------

struct MonomialTerm {
    double coefficient = 0.0;
    std::vector<std::pair<std::size_t, double>> exponents;  // (param index, power)
};

/// Piecewise-linear multiplier table over one axis, clamped at the ends.
struct FactorTable {
    std::vector<std::pair<double, double>> points;  // sorted by abscissa
    double at(double v) const;
};

struct SyntheticMetric {
    std::string name;
    std::vector<MonomialTerm> terms;
    std::map<ProcessCorner, double> process_factor;
    FactorTable voltage_factor;
    FactorTable temperature_factor;
    std::vector<double> sensitivity;  // a_i, one per mismatch dim
};

/// F_i = base_i(phys(x)) * corner_i(t) * exp(a_i . h)
class SyntheticBench final : public Evaluator {
public:
    SyntheticBench(DesignSpace space, ConstraintSet constraints, std::vector<SyntheticMetric> metrics,
                   std::size_t mismatch_dim);

    PerformanceVector evaluate(const DesignVector& x, const PvtCorner& t,
                               const MismatchCondition& h) const override;
    std::vector<std::string> metric_names() const override;
    std::size_t mismatch_dimension() const override { return mismatch_dim_; }

    // Natural-unit metrics before folding/normalization.
    std::vector<double> measure(const DesignVector& x, const PvtCorner& t,
                                const MismatchCondition& h) const;
    double base(std::size_t metric, std::span<const double> phys) const;
    double corner_factor(std::size_t metric, const PvtCorner& t) const;

private:
    DesignSpace space_;
    ConstraintSet constraints_;
    std::vector<SyntheticMetric> metrics_;
    std::size_t mismatch_dim_;
};

/// Everything a run needs to know about one circuit testcase.
struct Benchmark {
    std::string name;
    DesignSpace space;
    ConstraintSet constraints;
    VarianceModel variance;
    CornerGrid corners;
    PvtCorner typical;
    std::shared_ptr<const Evaluator> evaluator;
    std::shared_ptr<const SyntheticBench> synthetic;  // null for external benches
};

Benchmark parse_benchmark(const nlohmann::json& doc);
Benchmark load_benchmark(const std::filesystem::path& path);
/// Accepts a file path or a shipped bench name ("sal", "fia", "ocsa").
Benchmark resolve_benchmark(const std::string& name_or_path);
std::filesystem::path bench_directory();

}  // namespace glova
