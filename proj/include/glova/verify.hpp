#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glova/agent.hpp"
#include "glova/bench.hpp"
#include "glova/core.hpp"
#include "glova/variation.hpp"

namespace glova {

struct MetricScreen {
    double mean = 0.0;
    double sigma = 0.0;
    double screen_value = 0.0;  // mean + beta2 * sigma
    double margin = 0.0;        // normalized degradation; 0 at the boundary, > 0 = violated
    bool pass = false;
};

struct MuSigmaReport {
    std::vector<MetricScreen> metrics;
    bool pass = false;
};

/// mean + beta2 * sigma screening per metric. The default screens folded raw
/// metrics against their targets; `normalized` screens the degradation -f_i
/// against zero instead.
MuSigmaReport mu_sigma_screen(std::span<const PerformanceVector> samples,
                              const ConstraintSet& constraints, double beta2,
                              bool normalized = false);

double t_score(const MuSigmaReport& report);

struct CorrelationProfile {
    std::vector<double> rho;
};

/// Pearson coefficient between each mismatch component and the aggregate
/// degradation g = sum_i(-f_i).
CorrelationProfile pearson_profile(std::span<const MismatchCondition> conditions,
                                   std::span<const PerformanceVector> results);

double h_score(std::span<const double> h, const CorrelationProfile& profile);

/// Indices sorted by descending score, ties by original position.
std::vector<std::size_t> descending_order(std::span<const double> scores);

struct VerifyConfig {
    std::size_t samples = 100;         // N
    std::size_t presamples = 3;        // N'
    double beta2 = 4.0;
    bool mu_sigma = true;
    bool reordering = true;
    bool random_order = false;  // with reordering off: shuffle instead of enumeration order
    bool normalized_screen = false;
    std::size_t chunk_size = 1;  // phase-2 evaluations per batch
    std::size_t workers = 1;
};

enum class Verdict { passed, failed_screening, failed_simulation };
std::string to_string(Verdict v);

struct TraceEntry {
    int phase = 1;
    std::size_t corner = 0;
    std::size_t condition = 0;
    double h_score = 0.0;
    double reward = 0.0;
    std::size_t cumulative = 0;
    bool reused = false;
};

struct VerificationOutcome {
    Verdict verdict = Verdict::passed;
    std::optional<std::size_t> failing_corner;
    std::optional<std::size_t> failing_condition;
    std::size_t simulations = 0;  // evaluations performed here
    std::size_t reused = 0;       // presample evaluations taken from the caller
    std::vector<std::optional<double>> t_scores;  // per corner, enumeration order
    std::vector<std::size_t> phase1_order;
    std::vector<std::size_t> phase2_order;
    std::vector<TraceEntry> trace;
};

struct Presample {
    std::size_t corner = 0;
    std::vector<MismatchCondition> conditions;
    std::vector<PerformanceVector> results;
};

struct VerifyContext {
    const Evaluator& evaluator;
    const MismatchSampler& sampler;
    const ConstraintSet& constraints;
    const std::vector<PvtCorner>& corners;
    VerifyConfig config;
    std::uint64_t seed = 0;
    std::uint64_t attempt = 0;  // keys the sampling streams
};

/// Screening pass over every corner, then reordered full simulation.
/// `last_worst`, when given, orders phase 1 and receives each screened
/// corner's worst presample reward.
VerificationOutcome run_verification(const DesignVector& x, const VerifyContext& ctx,
                                     LastWorstBuffer* last_worst = nullptr,
                                     const Presample* presample = nullptr);

/// Decides whether the worst-corner presample earns a full verification.
bool gate_for_verification(std::span<const PerformanceVector> presample,
                           const ConstraintSet& constraints, const VerifyConfig& config);

}  // namespace glova
