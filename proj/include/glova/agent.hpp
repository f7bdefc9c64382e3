#pragma once

#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "glova/bench.hpp"
#include "glova/core.hpp"
#include "glova/mlp.hpp"
#include "glova/rng.hpp"
#include "glova/variation.hpp"

namespace glova {

struct NoiseSchedule {
    double sigma0 = 0.1;
    double decay = 0.995;
    double sigma_min = 0.01;

    double sigma(std::uint64_t iteration) const;
};

struct AgentConfig {
    std::vector<std::size_t> hidden = {64, 64, 64};
    std::size_t ensemble_size = 5;
    double beta1 = -3.0;
    double critic_lr = 1e-3;
    double actor_lr = 1e-4;
    std::size_t batch_size = 10;
    std::size_t updates_per_iteration = 1;
    std::size_t replay_capacity = 100000;
    double loss_bias = 0.0;
    NoiseSchedule noise;
};

/// mean + beta1 * population standard deviation.
double risk_bound(std::span<const double> outputs, double beta1);

class Actor {
public:
    Actor() = default;
    Actor(std::size_t p, const AgentConfig& cfg, RngStream& rng);

    DesignVector act(const DesignVector& x) const;

    Mlp net;
    Adam optimizer;
    NoiseSchedule noise;
};

class CriticEnsemble {
public:
    CriticEnsemble() = default;
    CriticEnsemble(std::size_t p, const AgentConfig& cfg, RngStream& rng);

    std::size_t size() const { return models.size(); }
    /// Base-model outputs, one row per model, one column per sample.
    Eigen::MatrixXd base_outputs(const Eigen::MatrixXd& x) const;

    std::vector<Mlp> models;
    std::vector<Adam> optimizers;
    double beta1 = -3.0;
};

double critic_aggregate(const CriticEnsemble& ensemble, const DesignVector& x);

struct ReplayRecord {
    DesignVector x;
    double reward = 0.0;
};

class WorstCaseReplayBuffer {
public:
    explicit WorstCaseReplayBuffer(std::size_t capacity = 100000) : capacity_(capacity) {}

    void store(DesignVector x, double worst_reward);
    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    const ReplayRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::deque<ReplayRecord>& records() const { return records_; }
    /// `n` distinct indices drawn uniformly.
    std::vector<std::size_t> sample_indices(std::size_t n, RngStream& rng) const;

private:
    std::size_t capacity_;
    std::deque<ReplayRecord> records_;
};

class LastWorstBuffer {
public:
    LastWorstBuffer() = default;
    explicit LastWorstBuffer(std::vector<PvtCorner> corners)
        : corners_(std::move(corners)), values_(corners_.size()) {}

    void update(std::size_t corner, double worst_reward) { values_.at(corner) = worst_reward; }
    bool initialized() const;
    std::optional<double> value(std::size_t corner) const { return values_.at(corner); }
    const std::vector<PvtCorner>& corners() const { return corners_; }
    std::size_t size() const { return corners_.size(); }
    /// Corner indices by ascending last worst reward; ties keep enumeration
    /// order and unset entries sort last.
    std::vector<std::size_t> ascending_order() const;

private:
    std::vector<PvtCorner> corners_;
    std::vector<std::optional<double>> values_;
};

/// Argmin of the last worst reward, ties by enumeration order.
std::size_t select_worst_corner(const LastWorstBuffer& lwb);

Eigen::MatrixXd to_matrix(std::span<const DesignVector> xs);

// Loss/gradient kernels, exposed for gradient checking.
double critic_loss(const Mlp& model, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& target,
                   double bias, MlpGradient* grad);
double actor_loss(const Mlp& actor, const CriticEnsemble& critic, const Eigen::MatrixXd& x,
                  double bias, MlpGradient* grad);

std::optional<std::vector<double>> update_critic(CriticEnsemble& ensemble,
                                                 const WorstCaseReplayBuffer& buffer,
                                                 std::size_t batch_size, double bias,
                                                 RngStream& rng);
std::optional<double> update_actor(Actor& actor, const CriticEnsemble& ensemble,
                                   const WorstCaseReplayBuffer& buffer, std::size_t batch_size,
                                   double bias, RngStream& rng);

DesignVector propose(const Actor& actor, const DesignVector& x_last, std::uint64_t iteration,
                     RngStream& rng);

struct Agent {
    Agent() = default;
    Agent(std::size_t p, const std::vector<PvtCorner>& corners, const AgentConfig& cfg,
          std::uint64_t seed);

    AgentConfig config;
    Actor actor;
    CriticEnsemble critic;
    WorstCaseReplayBuffer replay;
    LastWorstBuffer last_worst;
    DesignVector x_last;

    void save(std::ostream& out) const;
    static Agent load(std::istream& in);
};

struct IterationRecord {
    std::uint64_t iteration = 0;
    DesignVector x_new;
    std::size_t corner = 0;
    std::vector<MismatchCondition> conditions;
    std::vector<PerformanceVector> results;
    std::vector<double> rewards;
    double worst_reward = 0.0;
    std::vector<double> critic_losses;  // empty when the update was skipped
    std::optional<double> actor_loss;
};

struct TrainStepContext {
    const Evaluator& evaluator;
    const MismatchSampler& sampler;
    std::size_t samples = 3;  // N'
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

/// One optimization iteration: agent updates, proposal, worst-corner
/// sampling and evaluation. Buffers are written only after evaluation
/// succeeds.
IterationRecord train_step(Agent& agent, const TrainStepContext& ctx, std::uint64_t iteration);

}  // namespace glova
