#pragma once

#include <vector>

#include "glova/agent.hpp"
#include "glova/bench.hpp"
#include "glova/rng.hpp"

namespace glova {

struct SeederConfig {
    std::size_t budget = 200;
    std::size_t batch = 10;
    double init_half_width = 0.4;
    double min_half_width = 0.4 / 128.0;
    std::size_t success_tolerance = 3;
    std::size_t failure_tolerance = 5;
    std::size_t seeds_kept = 10;
    // Stop once this many feasible designs exist; 0 spends the whole budget.
    std::size_t stop_after_feasible = 0;
};

struct TrustRegion {
    DesignVector center;
    double half_width = 0.4;
    std::size_t success_count = 0;
    std::size_t failure_count = 0;

    double lower(std::size_t d) const;
    double upper(std::size_t d) const;
};

struct SeedPoint {
    DesignVector x;
    double reward = 0.0;
    // reward when infeasible, reward + worst normalized margin when feasible
    double score = 0.0;
};

struct SeedResult {
    std::vector<SeedPoint> evaluated;
    std::vector<SeedPoint> feasible;  // descending score
    std::size_t restarts = 0;
    bool succeeded() const { return !feasible.empty(); }
    /// Top `n` feasible designs, or the best-found designs when none is feasible.
    std::vector<SeedPoint> top(std::size_t n) const;
};

double seed_score(const PerformanceVector& perf);

/// Latin hypercube sample of `n` points in the box [lo, hi].
std::vector<DesignVector> latin_hypercube(std::size_t n, std::span<const double> lo,
                                          std::span<const double> hi, RngStream& rng);

/// Trust-region search at the typical condition (h = 0).
SeedResult seed_designs(const Evaluator& evaluator, const PvtCorner& typical, std::size_t p,
                        const SeederConfig& cfg, RngStream& rng, std::size_t workers = 1);

struct InitializationStats {
    std::size_t evaluations = 0;
};

/// Evaluates every seed at every corner under N' sampled conditions and
/// fills the replay and last-worst buffers. Seeds are processed in reverse
/// order so the last-worst buffer reflects seeds.front().
InitializationStats initialize_buffers(const std::vector<SeedPoint>& seeds, const Evaluator& evaluator,
                                       const MismatchSampler& sampler,
                                       const std::vector<PvtCorner>& corners, std::size_t samples,
                                       WorstCaseReplayBuffer& replay, LastWorstBuffer& last_worst,
                                       std::uint64_t seed, std::size_t workers = 1);

}  // namespace glova
