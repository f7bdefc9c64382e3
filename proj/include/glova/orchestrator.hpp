#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "glova/agent.hpp"
#include "glova/bench.hpp"
#include "glova/seeder.hpp"
#include "glova/verify.hpp"

namespace glova {

struct AblationFlags {
    bool ensemble_critic = true;
    bool mu_sigma = true;
    bool reordering = true;
};

struct RunConfig {
    std::string bench = "sal";
    VerificationMethod method = VerificationMethod::C;
    std::optional<CornerGrid> corners;  // overrides the bench grid
    std::size_t samples = 100;          // N
    std::size_t presamples = 3;         // N'
    double beta2 = 4.0;
    AgentConfig agent;
    SeederConfig seeder;
    std::size_t max_iterations = 5000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t chunk_size = 1;
    bool normalized_screen = false;
    AblationFlags ablation;
    std::filesystem::path output_dir;  // empty: no files
    std::filesystem::path resume_from;
    bool write_checkpoint = true;

    /// C forces N = N' = 1. Also checks
    /// cross-field invariants.
    void finalize();
    std::size_t effective_samples() const;
    std::size_t effective_presamples() const;
    AgentConfig effective_agent() const;
    VerifyConfig verify_config() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

struct SimulationCounts {
    std::uint64_t seeding = 0;
    std::uint64_t initialization = 0;
    std::uint64_t optimization = 0;
    std::uint64_t verification = 0;
    std::uint64_t total() const { return seeding + initialization + optimization + verification; }
};

struct RunReport {
    bool success = false;
    std::string verdict;  // "passed", "failed", "aborted"
    std::string error;
    DesignVector design;
    std::vector<double> physical;
    std::uint64_t iterations = 0;
    std::uint64_t verification_attempts = 0;
    SimulationCounts sims;
    std::uint64_t evaluator_calls = 0;
    bool seeding_succeeded = false;
    double wall_seconds = 0.0;
    std::filesystem::path iteration_log;

    nlohmann::json to_json(const Benchmark& bench, const RunConfig& cfg) const;
};

/// One logged optimization iteration (a row of iterations.csv).
struct IterationLogRow {
    std::uint64_t iteration = 0;
    std::string corner;
    double worst_reward = 0.0;
    double critic_loss = 0.0;  // mean over base models, NaN if skipped
    double actor_loss = 0.0;   // NaN if skipped
    bool gated = false;
    std::string verdict;  // empty when not verified
    std::uint64_t cumulative_sims = 0;
    DesignVector x;
};

std::string format_csv_row(const IterationLogRow& row);
inline constexpr const char* kIterationCsvHeader =
    "iteration,corner,r_worst,critic_loss,actor_loss,gated,verdict,cumulative_sims,x";
inline constexpr const char* kTraceCsvHeader =
    "attempt,phase,corner,condition,h_score,reward,reused,cumulative";

struct RunResult {
    RunReport report;
    std::vector<IterationLogRow> log;
};

RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Benchmark& bench);

/// Run checkpoint: agent state plus loop counters.
void save_checkpoint(const std::filesystem::path& path, const Agent& agent, std::uint64_t iteration,
                     const SimulationCounts& sims, std::uint64_t attempts);
struct Checkpoint {
    Agent agent;
    std::uint64_t iteration = 0;
    SimulationCounts sims;
    std::uint64_t attempts = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct CampaignSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<RunReport> reports;
    double success_rate = 0.0;
    double mean_iterations = 0.0;   // successful runs only
    double mean_simulations = 0.0;  // successful runs only
    double mean_runtime = 0.0;      // successful runs only

    nlohmann::json to_json() const;
};

CampaignSummary run_campaign(const RunConfig& base, const std::vector<std::uint64_t>& seeds);

/// Verification-only entry.
VerificationOutcome verify_design(const RunConfig& config, const Benchmark& bench,
                                  const DesignVector& x);
nlohmann::json to_json(const VerificationOutcome& o, const std::vector<PvtCorner>& corners);

std::vector<std::uint64_t> parse_seed_range(const std::string& text);

}  // namespace glova
