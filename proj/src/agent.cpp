#include "glova/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glova/binary_io.hpp"
#include "glova/error.hpp"

namespace glova {

double NoiseSchedule::sigma(std::uint64_t iteration) const {
    return std::max(sigma_min, sigma0 * std::pow(decay, static_cast<double>(iteration)));
}

double risk_bound(std::span<const double> outputs, double beta1) {
    if (outputs.empty()) throw StructuralError("risk bound of an empty ensemble");
    const double n = static_cast<double>(outputs.size());
    const double mean = std::accumulate(outputs.begin(), outputs.end(), 0.0) / n;
    double var = 0.0;
    for (double q : outputs) var += (q - mean) * (q - mean);
    return mean + beta1 * std::sqrt(var / n);
}

namespace {

std::vector<std::size_t> layer_dims(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out) {
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

}  // namespace

Actor::Actor(std::size_t p, const AgentConfig& cfg, RngStream& rng)
    : net(layer_dims(p, cfg.hidden, p), Activation::tanh, Activation::sigmoid, rng),
      optimizer(net, cfg.actor_lr),
      noise(cfg.noise) {}

DesignVector Actor::act(const DesignVector& x) const {
    Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.values().data(), x.size());
    Eigen::MatrixXd out = net.forward(in);
    return DesignVector(std::vector<double>(out.data(), out.data() + out.size()));
}

CriticEnsemble::CriticEnsemble(std::size_t p, const AgentConfig& cfg, RngStream& rng)
    : beta1(cfg.beta1) {
    if (cfg.ensemble_size == 0) throw ConfigError("ensemble size must be at least 1");
    for (std::size_t i = 0; i < cfg.ensemble_size; ++i) {
        models.emplace_back(layer_dims(p, cfg.hidden, 1), Activation::tanh, Activation::linear, rng);
        optimizers.emplace_back(models.back(), cfg.critic_lr);
    }
}

Eigen::MatrixXd CriticEnsemble::base_outputs(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(models.size(), x.cols());
    for (std::size_t i = 0; i < models.size(); ++i) out.row(i) = models[i].forward(x);
    return out;
}

double critic_aggregate(const CriticEnsemble& ensemble, const DesignVector& x) {
    if (ensemble.size() == 0) throw StructuralError("critic ensemble is empty");
    const Eigen::VectorXd q = ensemble.base_outputs(to_matrix(std::span(&x, 1))).col(0);
    return risk_bound(std::span<const double>(q.data(), q.size()), ensemble.beta1);
}

void WorstCaseReplayBuffer::store(DesignVector x, double worst_reward) {
    if (capacity_ == 0) return;
    if (records_.size() == capacity_) records_.pop_front();
    records_.push_back({std::move(x), worst_reward});
}

std::vector<std::size_t> WorstCaseReplayBuffer::sample_indices(std::size_t n, RngStream& rng) const {
    std::vector<std::size_t> idx(records_.size());
    std::iota(idx.begin(), idx.end(), 0);
    n = std::min(n, idx.size());
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    idx.resize(n);
    return idx;
}

bool LastWorstBuffer::initialized() const {
    return !values_.empty() &&
           std::all_of(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); });
}

std::vector<std::size_t> LastWorstBuffer::ascending_order() const {
    std::vector<std::size_t> order(values_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = values_[a].value_or(std::numeric_limits<double>::infinity());
        const double vb = values_[b].value_or(std::numeric_limits<double>::infinity());
        return va < vb;
    });
    return order;
}

std::size_t select_worst_corner(const LastWorstBuffer& lwb) {
    if (!lwb.initialized()) throw StateError("last worst-case buffer is not initialized");
    std::size_t best = 0;
    for (std::size_t i = 1; i < lwb.size(); ++i)
        if (*lwb.value(i) < *lwb.value(best)) best = i;
    return best;
}

Eigen::MatrixXd to_matrix(std::span<const DesignVector> xs) {
    if (xs.empty()) return {};
    Eigen::MatrixXd m(xs.front().size(), xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j)
        for (std::size_t i = 0; i < xs[j].size(); ++i) m(i, j) = xs[j][i];
    return m;
}

double critic_loss(const Mlp& model, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& target,
                   double bias, MlpGradient* grad) {
    Mlp::Tape tape;
    const Eigen::RowVectorXd q = model.forward(x, tape).row(0);
    const Eigen::RowVectorXd err = (q.array() + bias).matrix() - target;
    const double b = static_cast<double>(x.cols());
    if (grad) model.backward(tape, (2.0 / b) * err, grad);
    return err.squaredNorm() / b;
}

double actor_loss(const Mlp& actor, const CriticEnsemble& critic, const Eigen::MatrixXd& x,
                  double bias, MlpGradient* grad) {
    Mlp::Tape actor_tape;
    const Eigen::MatrixXd proposal = actor.forward(x, actor_tape);
    const Eigen::Index batch = x.cols();
    const std::size_t k = critic.size();

    std::vector<Mlp::Tape> tapes(k);
    Eigen::MatrixXd q(k, batch);
    for (std::size_t i = 0; i < k; ++i) q.row(i) = critic.models[i].forward(proposal, tapes[i]);

    // Q = mean + beta1 * sigma over the ensemble, per sample.
    const Eigen::RowVectorXd mean = q.colwise().mean();
    const Eigen::MatrixXd centered = q.rowwise() - mean;
    const Eigen::RowVectorXd sigma = (centered.array().square().colwise().sum() / k).sqrt();
    const Eigen::RowVectorXd aggregate = mean + critic.beta1 * sigma;

    const Eigen::RowVectorXd err = (aggregate.array() + bias - kSuccessReward).matrix();
    const double loss = err.squaredNorm() / static_cast<double>(batch);
    if (!grad) return loss;

    // dL/dQ_i = dL/dQ * (1/k + beta1 * (Q_i - mean) / (k * sigma))
    const Eigen::RowVectorXd d_aggregate = (2.0 / static_cast<double>(batch)) * err;
    Eigen::MatrixXd d_proposal = Eigen::MatrixXd::Zero(proposal.rows(), batch);
    for (std::size_t i = 0; i < k; ++i) {
        Eigen::RowVectorXd dqi(batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
            double s = 1.0 / static_cast<double>(k);
            if (sigma(b) > 0.0) s += critic.beta1 * centered(i, b) / (static_cast<double>(k) * sigma(b));
            dqi(b) = d_aggregate(b) * s;
        }
        d_proposal += critic.models[i].backward(tapes[i], dqi, nullptr);
    }
    actor.backward(actor_tape, d_proposal, grad);
    return loss;
}

std::optional<std::vector<double>> update_critic(CriticEnsemble& ensemble,
                                                 const WorstCaseReplayBuffer& buffer,
                                                 std::size_t batch_size, double bias,
                                                 RngStream& rng) {
    if (batch_size == 0 || buffer.size() < batch_size) return std::nullopt;
    std::vector<double> losses;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto idx = buffer.sample_indices(batch_size, rng);
        Eigen::MatrixXd x(buffer[0].x.size(), idx.size());
        Eigen::RowVectorXd y(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& rec = buffer[idx[j]];
            for (std::size_t d = 0; d < rec.x.size(); ++d) x(d, j) = rec.x[d];
            y(j) = rec.reward;
        }
        MlpGradient grad;
        losses.push_back(critic_loss(ensemble.models[i], x, y, bias, &grad));
        ensemble.optimizers[i].step(ensemble.models[i], grad);
    }
    return losses;
}

std::optional<double> update_actor(Actor& actor, const CriticEnsemble& ensemble,
                                   const WorstCaseReplayBuffer& buffer, std::size_t batch_size,
                                   double bias, RngStream& rng) {
    if (batch_size == 0 || buffer.size() < batch_size) return std::nullopt;
    const auto idx = buffer.sample_indices(batch_size, rng);
    Eigen::MatrixXd x(buffer[0].x.size(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        for (std::size_t d = 0; d < buffer[idx[j]].x.size(); ++d) x(d, j) = buffer[idx[j]].x[d];
    MlpGradient grad;
    const double loss = actor_loss(actor.net, ensemble, x, bias, &grad);
    actor.optimizer.step(actor.net, grad);
    return loss;
}

DesignVector propose(const Actor& actor, const DesignVector& x_last, std::uint64_t iteration,
                     RngStream& rng) {
    const DesignVector mean = actor.act(x_last);
    const double sigma = actor.noise.sigma(iteration);
    std::vector<double> out(mean.values().begin(), mean.values().end());
    if (sigma > 0.0)
        for (auto& v : out) v += sigma * rng.normal();
    return DesignVector(std::move(out));
}

Agent::Agent(std::size_t p, const std::vector<PvtCorner>& corners, const AgentConfig& cfg,
             std::uint64_t seed)
    : config(cfg), replay(cfg.replay_capacity), last_worst(corners) {
    RngStream actor_rng(seed, "init-actor");
    actor = Actor(p, cfg, actor_rng);
    RngStream critic_rng(seed, "init-critic");
    critic = CriticEnsemble(p, cfg, critic_rng);
    x_last = DesignVector::filled(p, 0.5);
}

IterationRecord train_step(Agent& agent, const TrainStepContext& ctx, std::uint64_t iteration) {
    IterationRecord rec;
    rec.iteration = iteration;
    const auto& cfg = agent.config;

    for (std::size_t m = 0; m < cfg.updates_per_iteration; ++m) {
        RngStream critic_rng(ctx.seed, "critic-batch", iteration, m);
        if (auto losses = update_critic(agent.critic, agent.replay, cfg.batch_size, cfg.loss_bias,
                                        critic_rng))
            rec.critic_losses = std::move(*losses);
        RngStream actor_rng(ctx.seed, "actor-batch", iteration, m);
        if (auto loss = update_actor(agent.actor, agent.critic, agent.replay, cfg.batch_size,
                                     cfg.loss_bias, actor_rng))
            rec.actor_loss = loss;
    }

    RngStream noise_rng(ctx.seed, "noise", iteration);
    rec.x_new = propose(agent.actor, agent.x_last, iteration, noise_rng);
    rec.corner = select_worst_corner(agent.last_worst);

    RngStream sample_rng(ctx.seed, "presample", iteration);
    rec.conditions = ctx.sampler.sample(rec.x_new, ctx.samples, sample_rng);
    std::vector<EvalJob> jobs;
    for (const auto& h : rec.conditions)
        jobs.push_back({rec.x_new, agent.last_worst.corners()[rec.corner], h});
    rec.results = evaluate_batch(ctx.evaluator, jobs, ctx.workers);

    rec.worst_reward = kSuccessReward;
    for (const auto& perf : rec.results) {
        rec.rewards.push_back(reward(perf).value);
        rec.worst_reward = std::min(rec.worst_reward, rec.rewards.back());
    }

    agent.replay.store(rec.x_new, rec.worst_reward);
    agent.last_worst.update(rec.corner, rec.worst_reward);
    agent.x_last = rec.x_new;
    return rec;
}

namespace {
constexpr std::uint32_t kAgentMagic = 0x41474c47;  // "GLGA"
constexpr std::uint32_t kAgentVersion = 1;

void put_config(std::ostream& out, const AgentConfig& c) {
    bin::put<std::uint64_t>(out, c.hidden.size());
    for (auto h : c.hidden) bin::put<std::uint64_t>(out, h);
    bin::put<std::uint64_t>(out, c.ensemble_size);
    bin::put(out, c.beta1);
    bin::put(out, c.critic_lr);
    bin::put(out, c.actor_lr);
    bin::put<std::uint64_t>(out, c.batch_size);
    bin::put<std::uint64_t>(out, c.updates_per_iteration);
    bin::put<std::uint64_t>(out, c.replay_capacity);
    bin::put(out, c.loss_bias);
    bin::put(out, c.noise.sigma0);
    bin::put(out, c.noise.decay);
    bin::put(out, c.noise.sigma_min);
}

AgentConfig get_config(std::istream& in) {
    AgentConfig c;
    c.hidden.resize(bin::get<std::uint64_t>(in));
    for (auto& h : c.hidden) h = bin::get<std::uint64_t>(in);
    c.ensemble_size = bin::get<std::uint64_t>(in);
    c.beta1 = bin::get<double>(in);
    c.critic_lr = bin::get<double>(in);
    c.actor_lr = bin::get<double>(in);
    c.batch_size = bin::get<std::uint64_t>(in);
    c.updates_per_iteration = bin::get<std::uint64_t>(in);
    c.replay_capacity = bin::get<std::uint64_t>(in);
    c.loss_bias = bin::get<double>(in);
    c.noise.sigma0 = bin::get<double>(in);
    c.noise.decay = bin::get<double>(in);
    c.noise.sigma_min = bin::get<double>(in);
    return c;
}

void put_design(std::ostream& out, const DesignVector& x) {
    bin::put_doubles(out, x.values().data(), x.size());
}
}  // namespace

void Agent::save(std::ostream& out) const {
    bin::put(out, kAgentMagic);
    bin::put(out, kAgentVersion);
    put_config(out, config);
    actor.net.save(out);
    actor.optimizer.save(out);
    bin::put<std::uint64_t>(out, critic.size());
    bin::put(out, critic.beta1);
    for (std::size_t i = 0; i < critic.size(); ++i) {
        critic.models[i].save(out);
        critic.optimizers[i].save(out);
    }
    bin::put<std::uint64_t>(out, replay.size());
    for (const auto& r : replay.records()) {
        put_design(out, r.x);
        bin::put(out, r.reward);
    }
    bin::put<std::uint64_t>(out, last_worst.size());
    for (std::size_t i = 0; i < last_worst.size(); ++i) {
        const auto& c = last_worst.corners()[i];
        bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.process));
        bin::put(out, c.voltage);
        bin::put(out, c.temperature);
        const auto v = last_worst.value(i);
        bin::put<std::uint8_t>(out, v.has_value());
        bin::put(out, v.value_or(0.0));
    }
    put_design(out, x_last);
}

Agent Agent::load(std::istream& in) {
    if (bin::get<std::uint32_t>(in) != kAgentMagic) throw StateError("not an agent checkpoint");
    if (bin::get<std::uint32_t>(in) != kAgentVersion)
        throw StateError("unsupported agent checkpoint version");
    Agent a;
    a.config = get_config(in);
    a.actor.net = Mlp::load(in);
    a.actor.optimizer = Adam::load(in);
    a.actor.noise = a.config.noise;
    const auto k = bin::get<std::uint64_t>(in);
    a.critic.beta1 = bin::get<double>(in);
    for (std::uint64_t i = 0; i < k; ++i) {
        a.critic.models.push_back(Mlp::load(in));
        a.critic.optimizers.push_back(Adam::load(in));
    }
    a.replay = WorstCaseReplayBuffer(a.config.replay_capacity);
    const auto n = bin::get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n; ++i) {
        DesignVector x(bin::get_doubles(in));
        a.replay.store(std::move(x), bin::get<double>(in));
    }
    const auto corners = bin::get<std::uint64_t>(in);
    std::vector<PvtCorner> cs;
    std::vector<std::optional<double>> vals;
    for (std::uint64_t i = 0; i < corners; ++i) {
        PvtCorner c;
        c.process = static_cast<ProcessCorner>(bin::get<std::uint32_t>(in));
        c.voltage = bin::get<double>(in);
        c.temperature = bin::get<double>(in);
        cs.push_back(c);
        const bool has = bin::get<std::uint8_t>(in) != 0;
        const double v = bin::get<double>(in);
        vals.push_back(has ? std::optional<double>(v) : std::nullopt);
    }
    a.last_worst = LastWorstBuffer(cs);
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i]) a.last_worst.update(i, *vals[i]);
    a.x_last = DesignVector(bin::get_doubles(in));
    return a;
}

}  // namespace glova
