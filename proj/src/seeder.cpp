#include "glova/seeder.hpp"

#include <algorithm>
#include <numeric>

#include "glova/error.hpp"

namespace glova {

double TrustRegion::lower(std::size_t d) const { return std::max(0.0, center[d] - half_width); }
double TrustRegion::upper(std::size_t d) const { return std::min(1.0, center[d] + half_width); }

double seed_score(const PerformanceVector& perf) {
    const double r = reward(perf).value;
    if (r < kSuccessReward) return r;
    return r + *std::min_element(perf.normalized.begin(), perf.normalized.end());
}

std::vector<SeedPoint> SeedResult::top(std::size_t n) const {
    if (!feasible.empty())
        return {feasible.begin(), feasible.begin() + std::min(n, feasible.size())};
    std::vector<SeedPoint> sorted = evaluated;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SeedPoint& a, const SeedPoint& b) { return a.score > b.score; });
    sorted.resize(std::min(n, sorted.size()));
    return sorted;
}

std::vector<DesignVector> latin_hypercube(std::size_t n, std::span<const double> lo,
                                          std::span<const double> hi, RngStream& rng) {
    const std::size_t p = lo.size();
    std::vector<std::vector<double>> pts(n, std::vector<double>(p));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < p; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
            pts[i][d] = lo[d] + u * (hi[d] - lo[d]);
        }
    }
    std::vector<DesignVector> out;
    out.reserve(n);
    for (auto& v : pts) out.emplace_back(std::move(v));
    return out;
}

SeedResult seed_designs(const Evaluator& evaluator, const PvtCorner& typical, std::size_t p,
                        const SeederConfig& cfg, RngStream& rng, std::size_t workers) {
    if (cfg.batch == 0) throw ConfigError("seeder batch size must be positive");
    SeedResult result;
    const MismatchCondition nominal{std::vector<double>(evaluator.mismatch_dimension(), 0.0),
                                    std::vector<double>(evaluator.mismatch_dimension(), 0.0)};

    std::vector<double> lo(p), hi(p);
    TrustRegion tr;
    tr.half_width = cfg.init_half_width;
    bool restart = true;  // next round is a global design
    double local_best = -std::numeric_limits<double>::infinity();
    std::size_t feasible_count = 0;

    while (result.evaluated.size() < cfg.budget) {
        const std::size_t n = std::min(cfg.batch, cfg.budget - result.evaluated.size());
        for (std::size_t d = 0; d < p; ++d) {
            lo[d] = restart ? 0.0 : tr.lower(d);
            hi[d] = restart ? 1.0 : tr.upper(d);
        }
        const auto candidates = latin_hypercube(n, lo, hi, rng);
        std::vector<EvalJob> jobs;
        for (const auto& x : candidates) jobs.push_back({x, typical, nominal});
        const auto perfs = evaluate_batch(evaluator, jobs, workers);

        std::size_t best_idx = 0;
        double round_best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            SeedPoint sp{candidates[i], reward(perfs[i]).value, seed_score(perfs[i])};
            if (sp.reward == kSuccessReward) ++feasible_count;
            if (sp.score > round_best) {
                round_best = sp.score;
                best_idx = i;
            }
            result.evaluated.push_back(std::move(sp));
        }

        if (restart) {
            tr = TrustRegion{candidates[best_idx], cfg.init_half_width, 0, 0};
            local_best = round_best;
            restart = false;
        } else {
            if (round_best > local_best + 1e-3 * std::abs(local_best)) {
                ++tr.success_count;
                tr.failure_count = 0;
                tr.center = candidates[best_idx];
                local_best = round_best;
            } else {
                ++tr.failure_count;
                tr.success_count = 0;
            }
            if (tr.success_count >= cfg.success_tolerance) {
                tr.half_width = std::min(2.0 * tr.half_width, 0.5);
                tr.success_count = 0;
            } else if (tr.failure_count >= cfg.failure_tolerance) {
                tr.half_width *= 0.5;
                tr.failure_count = 0;
            }
            if (tr.half_width < cfg.min_half_width) {
                restart = true;
                ++result.restarts;
            }
        }
        if (cfg.stop_after_feasible > 0 && feasible_count >= cfg.stop_after_feasible) break;
    }

    for (const auto& sp : result.evaluated)
        if (sp.reward == kSuccessReward) result.feasible.push_back(sp);
    std::stable_sort(result.feasible.begin(), result.feasible.end(),
                     [](const SeedPoint& a, const SeedPoint& b) { return a.score > b.score; });
    return result;
}

InitializationStats initialize_buffers(const std::vector<SeedPoint>& seeds, const Evaluator& evaluator,
                                       const MismatchSampler& sampler,
                                       const std::vector<PvtCorner>& corners, std::size_t samples,
                                       WorstCaseReplayBuffer& replay, LastWorstBuffer& last_worst,
                                       std::uint64_t seed, std::size_t workers) {
    if (seeds.empty()) throw ConfigError("buffer initialization needs at least one seed design");
    if (last_worst.size() != corners.size())
        throw StructuralError("last-worst buffer does not match the corner list");
    InitializationStats stats;
    for (std::size_t s = seeds.size(); s-- > 0;) {
        const auto& x = seeds[s].x;
        std::vector<EvalJob> jobs;
        std::vector<std::size_t> job_corner;
        for (std::size_t c = 0; c < corners.size(); ++c) {
            RngStream rng(seed, "init", s, c);
            for (auto& h : sampler.sample(x, samples, rng)) {
                jobs.push_back({x, corners[c], std::move(h)});
                job_corner.push_back(c);
            }
        }
        const auto perfs = evaluate_batch(evaluator, jobs, workers);
        stats.evaluations += perfs.size();

        std::vector<double> corner_worst(corners.size(), kSuccessReward);
        for (std::size_t j = 0; j < perfs.size(); ++j)
            corner_worst[job_corner[j]] = std::min(corner_worst[job_corner[j]], reward(perfs[j]).value);
        for (std::size_t c = 0; c < corners.size(); ++c) last_worst.update(c, corner_worst[c]);
        replay.store(x, *std::min_element(corner_worst.begin(), corner_worst.end()));
    }
    return stats;
}

}  // namespace glova
