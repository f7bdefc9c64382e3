#include "glova/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glova/error.hpp"

namespace glova {

namespace {

struct Moments {
    double mean = 0.0;
    double sigma = 0.0;  // population
};

template <typename F>
Moments moments(std::size_t n, F&& value) {
    Moments m;
    for (std::size_t k = 0; k < n; ++k) m.mean += value(k);
    m.mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) var += (value(k) - m.mean) * (value(k) - m.mean);
    m.sigma = std::sqrt(var / static_cast<double>(n));
    return m;
}

bool all_success(std::span<const PerformanceVector> results) {
    return std::all_of(results.begin(), results.end(),
                       [](const PerformanceVector& p) { return reward(p).success(); });
}

}  // namespace

MuSigmaReport mu_sigma_screen(std::span<const PerformanceVector> samples,
                              const ConstraintSet& constraints, double beta2, bool normalized) {
    if (samples.empty()) throw StructuralError("mu-sigma screening needs at least one sample");
    MuSigmaReport report;
    report.pass = true;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        for (const auto& s : samples)
            if (s.raw.size() != constraints.size() || s.normalized.size() != constraints.size())
                throw StructuralError("sample has the wrong number of metrics");
        MetricScreen m;
        if (normalized) {
            const auto mo = moments(samples.size(), [&](std::size_t k) { return -samples[k].normalized[i]; });
            m.mean = mo.mean;
            m.sigma = mo.sigma;
            m.screen_value = mo.mean + beta2 * mo.sigma;
            m.margin = m.screen_value;
            m.pass = m.screen_value <= 0.0;
        } else {
            const auto mo = moments(samples.size(), [&](std::size_t k) { return samples[k].raw[i]; });
            m.mean = mo.mean;
            m.sigma = mo.sigma;
            m.screen_value = mo.mean + beta2 * mo.sigma;
            m.margin = -normalize_metric(constraints.target(i), m.screen_value);
            m.pass = m.screen_value <= constraints.target(i);
        }
        report.pass = report.pass && m.pass;
        report.metrics.push_back(m);
    }
    return report;
}

double t_score(const MuSigmaReport& report) {
    double s = 0.0;
    for (const auto& m : report.metrics) s += m.margin;
    return s;
}

CorrelationProfile pearson_profile(std::span<const MismatchCondition> conditions,
                                   std::span<const PerformanceVector> results) {
    if (conditions.size() != results.size())
        throw StructuralError("presample conditions and results differ in length");
    CorrelationProfile prof;
    if (conditions.empty()) return prof;
    const std::size_t r = conditions.front().h.size();
    prof.rho.assign(r, 0.0);
    const std::size_t n = conditions.size();
    if (n < 2) return prof;

    std::vector<double> g(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (double f : results[k].normalized) g[k] -= f;
    const double g_mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);

    for (std::size_t d = 0; d < r; ++d) {
        double h_mean = 0.0;
        for (const auto& c : conditions) h_mean += c.h.at(d);
        h_mean /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double dx = conditions[k].h[d] - h_mean;
            const double dy = g[k] - g_mean;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        const double den = std::sqrt(sxx) * std::sqrt(syy);
        prof.rho[d] = den > 0.0 ? std::clamp(sxy / den, -1.0, 1.0) : 0.0;
    }
    return prof;
}

double h_score(std::span<const double> h, const CorrelationProfile& profile) {
    if (profile.rho.empty()) return 0.0;
    if (h.size() != profile.rho.size())
        throw StructuralError("mismatch vector and correlation profile differ in length");
    double s = 0.0;
    for (std::size_t d = 0; d < h.size(); ++d) s += h[d] * profile.rho[d];
    return s;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::passed: return "passed";
        case Verdict::failed_screening: return "failed_screening";
        case Verdict::failed_simulation: return "failed_simulation";
    }
    return "?";
}

bool gate_for_verification(std::span<const PerformanceVector> presample,
                           const ConstraintSet& constraints, const VerifyConfig& config) {
    if (presample.empty()) return false;
    if (!all_success(presample)) return false;
    if (!config.mu_sigma) return true;
    return mu_sigma_screen(presample, constraints, config.beta2, config.normalized_screen).pass;
}

VerificationOutcome run_verification(const DesignVector& x, const VerifyContext& ctx,
                                     LastWorstBuffer* last_worst, const Presample* presample) {
    const auto& cfg = ctx.config;
    const std::size_t k = ctx.corners.size();
    if (k == 0) throw ConfigError("verification needs at least one corner");
    if (cfg.presamples == 0 || cfg.presamples > cfg.samples)
        throw ConfigError("verification needs 1 <= N' <= N");
    if (last_worst && last_worst->size() != k)
        throw StructuralError("last-worst buffer does not match the corner list");

    VerificationOutcome out;
    out.t_scores.assign(k, std::nullopt);
    std::vector<CorrelationProfile> profiles(k);

    auto record = [&](int phase, std::size_t corner, std::size_t cond, double hs, double r,
                      bool reused) {
        if (!reused) ++out.simulations;
        out.trace.push_back({phase, corner, cond, hs, r, out.simulations, reused});
    };

    // Phase 1: presample every corner and screen.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    if (cfg.reordering && last_worst) order = last_worst->ascending_order();
    out.phase1_order = order;

    for (std::size_t j : order) {
        std::vector<MismatchCondition> conds;
        std::vector<PerformanceVector> results;
        const bool reuse = presample && presample->corner == j &&
                           presample->conditions.size() == cfg.presamples &&
                           presample->results.size() == cfg.presamples;
        if (reuse) {
            conds = presample->conditions;
            results = presample->results;
            out.reused += results.size();
        } else {
            RngStream rng(ctx.seed, "verify-presample", ctx.attempt, j);
            conds = ctx.sampler.sample(x, cfg.presamples, rng);
            std::vector<EvalJob> jobs;
            for (const auto& h : conds) jobs.push_back({x, ctx.corners[j], h});
            results = evaluate_batch(ctx.evaluator, jobs, cfg.workers);
        }
        double worst = kSuccessReward;
        std::optional<std::size_t> first_fail;
        for (std::size_t n = 0; n < results.size(); ++n) {
            const double r = reward(results[n]).value;
            record(1, j, n, 0.0, r, reuse);
            worst = std::min(worst, r);
            if (!first_fail && r != kSuccessReward) first_fail = n;
        }
        if (last_worst) last_worst->update(j, worst);

        const auto report = mu_sigma_screen(results, ctx.constraints, cfg.beta2, cfg.normalized_screen);
        if (first_fail) {
            out.verdict = cfg.mu_sigma ? Verdict::failed_screening : Verdict::failed_simulation;
            out.failing_corner = j;
            out.failing_condition = *first_fail;
            return out;
        }
        if (cfg.mu_sigma && !report.pass) {
            out.verdict = Verdict::failed_screening;
            out.failing_corner = j;
            return out;
        }
        out.t_scores[j] = t_score(report);
        profiles[j] = pearson_profile(conds, results);
    }

    // Phase 2: remaining N - N' conditions per corner, most severe first.
    std::vector<std::size_t> order2(k);
    std::iota(order2.begin(), order2.end(), 0);
    if (cfg.reordering) {
        std::vector<double> ts(k);
        for (std::size_t j = 0; j < k; ++j) ts[j] = *out.t_scores[j];
        order2 = descending_order(ts);
    } else if (cfg.random_order) {
        RngStream rng(ctx.seed, "verify-order", ctx.attempt, k);
        std::shuffle(order2.begin(), order2.end(), rng.engine());
    }
    out.phase2_order = order2;

    const std::size_t remaining = cfg.samples - cfg.presamples;
    if (remaining == 0) return out;
    const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);

    for (std::size_t j : order2) {
        RngStream rng(ctx.seed, "verify-full", ctx.attempt, j);
        const auto conds = ctx.sampler.sample(x, remaining, rng);
        std::vector<double> scores(conds.size());
        for (std::size_t n = 0; n < conds.size(); ++n) scores[n] = h_score(conds[n].h, profiles[j]);
        std::vector<std::size_t> cond_order(conds.size());
        std::iota(cond_order.begin(), cond_order.end(), 0);
        if (cfg.reordering) {
            cond_order = descending_order(scores);
        } else if (cfg.random_order) {
            RngStream shuffle_rng(ctx.seed, "verify-order", ctx.attempt, j);
            std::shuffle(cond_order.begin(), cond_order.end(), shuffle_rng.engine());
        }

        for (std::size_t start = 0; start < cond_order.size(); start += chunk) {
            const std::size_t end = std::min(start + chunk, cond_order.size());
            std::vector<EvalJob> jobs;
            for (std::size_t q = start; q < end; ++q)
                jobs.push_back({x, ctx.corners[j], conds[cond_order[q]]});
            const auto results = evaluate_batch(ctx.evaluator, jobs, cfg.workers);
            std::optional<std::size_t> fail;
            for (std::size_t q = start; q < end; ++q) {
                const double r = reward(results[q - start]).value;
                record(2, j, cond_order[q], scores[cond_order[q]], r, false);
                if (!fail && r != kSuccessReward) fail = cond_order[q];
            }
            if (fail) {
                out.verdict = Verdict::failed_simulation;
                out.failing_corner = j;
                out.failing_condition = *fail;
                return out;
            }
        }
    }
    return out;
}

}  // namespace glova
