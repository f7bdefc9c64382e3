#pragma once

#include <span>
#include <string>
#include <vector>

namespace glova {

/// Reward granted when every constraint is met.
inline constexpr double kSuccessReward = 0.2;
/// Denominator floor for metric normalization.
inline constexpr double kNormalizeEpsilon = 1e-12;

enum class ParamKind { width, length, capacitance };
enum class ParamScale { linear, log };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::width;
    double min = 0.0;  // um or pF
    double max = 0.0;
    ParamScale scale = ParamScale::linear;
};

class DesignSpace {
public:
    DesignSpace() = default;
    explicit DesignSpace(std::vector<ParamSpec> params);

    std::size_t dimension() const noexcept { return params_.size(); }
    const std::vector<ParamSpec>& params() const noexcept { return params_; }
    const ParamSpec& param(std::size_t i) const { return params_.at(i); }
    std::size_t index_of(const std::string& name) const;

private:
    std::vector<ParamSpec> params_;
};

/// Normalized design coordinates, each clamped into [0, 1].
class DesignVector {
public:
    DesignVector() = default;
    explicit DesignVector(std::vector<double> values);
    static DesignVector filled(std::size_t p, double v);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    bool operator==(const DesignVector&) const = default;

private:
    std::vector<double> values_;
};

/// Physical parameter values (um / pF) in DesignSpace order.
std::vector<double> denormalize(const DesignVector& x, const DesignSpace& space);

enum class Direction { upper_bound, lower_bound };

struct MetricSpec {
    std::string name;
    double target = 0.0;  // in natural metric units
    Direction direction = Direction::upper_bound;
};

/// Constraint targets folded to upper-bound form: lower-bound metrics have
/// both target and measurement negated.
class ConstraintSet {
public:
    ConstraintSet() = default;
    explicit ConstraintSet(std::vector<MetricSpec> metrics);

    std::size_t size() const noexcept { return metrics_.size(); }
    const std::vector<MetricSpec>& metrics() const noexcept { return metrics_; }
    std::vector<std::string> names() const;
    // Upper-bound form target.
    double target(std::size_t i) const { return targets_[i]; }
    std::span<const double> targets() const noexcept { return targets_; }
    // Natural-unit measurement -> upper-bound form.
    std::vector<double> fold(std::span<const double> natural) const;
    double unfold(std::size_t i, double folded) const;

private:
    std::vector<MetricSpec> metrics_;
    std::vector<double> targets_;
};

struct PerformanceVector {
    std::vector<double> raw;         // upper-bound form F_i
    std::vector<double> normalized;  // f_i, >= 0 iff the constraint is met
};

double normalize_metric(double target, double raw);
PerformanceVector normalize_metrics(std::span<const double> raw, const ConstraintSet& constraints);

struct Reward {
    double value = 0.0;
    bool success() const noexcept { return value == kSuccessReward; }
};

Reward reward(const PerformanceVector& perf);
Reward reward(std::span<const double> normalized);

}  // namespace glova
