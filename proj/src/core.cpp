#include "glova/core.hpp"

#include <algorithm>
#include <cmath>

#include "glova/error.hpp"

namespace glova {

DesignSpace::DesignSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
    if (params_.empty()) throw ConfigError("design space needs at least one parameter");
    for (const auto& p : params_) {
        if (!(p.min > 0.0)) throw ConfigError("parameter '" + p.name + "' needs a positive minimum");
        if (!(p.min < p.max)) throw ConfigError("parameter '" + p.name + "' needs min < max");
    }
}

std::size_t DesignSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    throw ConfigError("unknown design parameter '" + name + "'");
}

DesignVector::DesignVector(std::vector<double> values) : values_(std::move(values)) {
    for (auto& v : values_) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
}

DesignVector DesignVector::filled(std::size_t p, double v) {
    return DesignVector(std::vector<double>(p, v));
}

std::vector<double> denormalize(const DesignVector& x, const DesignSpace& space) {
    if (x.size() != space.dimension())
        throw StructuralError("design vector has " + std::to_string(x.size()) +
                              " values, design space has " + std::to_string(space.dimension()));
    std::vector<double> phys(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& p = space.param(i);
        const double u = x[i];
        if (u <= 0.0) {
            phys[i] = p.min;
        } else if (u >= 1.0) {
            phys[i] = p.max;
        } else if (p.scale == ParamScale::linear) {
            phys[i] = p.min + u * (p.max - p.min);
        } else {
            phys[i] = p.min * std::exp(u * std::log(p.max / p.min));
        }
    }
    return phys;
}

ConstraintSet::ConstraintSet(std::vector<MetricSpec> metrics) : metrics_(std::move(metrics)) {
    if (metrics_.empty()) throw ConfigError("constraint set needs at least one metric");
    targets_.reserve(metrics_.size());
    for (const auto& m : metrics_)
        targets_.push_back(m.direction == Direction::lower_bound ? -m.target : m.target);
}

std::vector<std::string> ConstraintSet::names() const {
    std::vector<std::string> out;
    for (const auto& m : metrics_) out.push_back(m.name);
    return out;
}

std::vector<double> ConstraintSet::fold(std::span<const double> natural) const {
    if (natural.size() != metrics_.size())
        throw StructuralError("expected " + std::to_string(metrics_.size()) + " metrics, got " +
                              std::to_string(natural.size()));
    std::vector<double> out(natural.begin(), natural.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (metrics_[i].direction == Direction::lower_bound) out[i] = -out[i];
    return out;
}

double ConstraintSet::unfold(std::size_t i, double folded) const {
    return metrics_.at(i).direction == Direction::lower_bound ? -folded : folded;
}

// f >= 0 iff met, also for folded (negative) values.
double normalize_metric(double target, double raw) {
    double den = std::abs(target + raw);
    if (den < kNormalizeEpsilon) den = kNormalizeEpsilon;
    return (target - raw) / den;
}

PerformanceVector normalize_metrics(std::span<const double> raw, const ConstraintSet& constraints) {
    if (raw.size() != constraints.size())
        throw StructuralError("expected " + std::to_string(constraints.size()) + " metrics, got " +
                              std::to_string(raw.size()));
    PerformanceVector perf;
    perf.raw.assign(raw.begin(), raw.end());
    perf.normalized.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        perf.normalized[i] = normalize_metric(constraints.target(i), raw[i]);
    return perf;
}

Reward reward(std::span<const double> normalized) {
    double r = 0.0;
    for (double f : normalized) r += std::min(f, 0.0);
    return Reward{r >= 0.0 ? kSuccessReward : r};
}

Reward reward(const PerformanceVector& perf) { return reward(perf.normalized); }

}  // namespace glova
