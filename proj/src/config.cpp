#include <cstdlib>
#include <fstream>

#include "glova/error.hpp"
#include "glova/orchestrator.hpp"

namespace glova {

using nlohmann::json;

void RunConfig::finalize() {
    if (method == VerificationMethod::C) {
        samples = 1;
        presamples = 1;
    }
    if (presamples == 0) throw ConfigError("N' must be at least 1");
    if (presamples > samples) throw ConfigError("N' must not exceed N");
    if (beta2 < 0.0) throw ConfigError("beta2 must be non-negative");
    if (agent.batch_size == 0) throw ConfigError("batch size must be positive");
    if (workers == 0) workers = 1;
    if (corners && method != VerificationMethod::CMCGL && corners->processes.empty())
        throw ConfigError("corner grid override needs process corners");
}

std::size_t RunConfig::effective_samples() const {
    return method == VerificationMethod::C ? 1 : samples;
}

std::size_t RunConfig::effective_presamples() const {
    return method == VerificationMethod::C ? 1 : presamples;
}

AgentConfig RunConfig::effective_agent() const {
    AgentConfig a = agent;
    if (!ablation.ensemble_critic) a.ensemble_size = 1;
    return a;
}

VerifyConfig RunConfig::verify_config() const {
    VerifyConfig v;
    v.samples = effective_samples();
    v.presamples = effective_presamples();
    v.beta2 = beta2;
    v.mu_sigma = ablation.mu_sigma;
    v.reordering = ablation.reordering;
    v.normalized_screen = normalized_screen;
    v.chunk_size = chunk_size;
    v.workers = workers;
    return v;
}

namespace {

CornerGrid parse_grid(const json& j) {
    CornerGrid g;
    for (const auto& p : j.value("process", json::array())) g.processes.push_back(parse_process(p));
    g.voltages = j.at("voltage").get<std::vector<double>>();
    g.temperatures = j.at("temperature").get<std::vector<double>>();
    return g;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    RunConfig c;
    try {
        c.bench = j.value("bench", c.bench);
        c.method = parse_method(j.value("method", std::string("C")));
        if (j.contains("corners")) c.corners = parse_grid(j.at("corners"));
        c.samples = j.value("N", c.samples);
        c.presamples = j.value("N_prime", c.presamples);
        c.beta2 = j.value("beta2", c.beta2);
        c.agent.beta1 = j.value("beta1", c.agent.beta1);
        if (j.contains("agent")) {
            const auto& a = j.at("agent");
            c.agent.hidden = a.value("hidden", c.agent.hidden);
            c.agent.ensemble_size = a.value("ensemble_size", c.agent.ensemble_size);
            c.agent.critic_lr = a.value("critic_lr", c.agent.critic_lr);
            c.agent.actor_lr = a.value("actor_lr", c.agent.actor_lr);
            c.agent.batch_size = a.value("batch_size", c.agent.batch_size);
            c.agent.updates_per_iteration = a.value("updates_per_iteration", c.agent.updates_per_iteration);
            c.agent.replay_capacity = a.value("replay_capacity", c.agent.replay_capacity);
            c.agent.loss_bias = a.value("loss_bias", c.agent.loss_bias);
            if (a.contains("noise")) {
                const auto& n = a.at("noise");
                c.agent.noise.sigma0 = n.value("sigma0", c.agent.noise.sigma0);
                c.agent.noise.decay = n.value("decay", c.agent.noise.decay);
                c.agent.noise.sigma_min = n.value("sigma_min", c.agent.noise.sigma_min);
            }
        }
        if (j.contains("seeder")) {
            const auto& s = j.at("seeder");
            c.seeder.budget = s.value("budget", c.seeder.budget);
            c.seeder.batch = s.value("batch", c.seeder.batch);
            c.seeder.init_half_width = s.value("init_half_width", c.seeder.init_half_width);
            c.seeder.min_half_width = s.value("min_half_width", c.seeder.min_half_width);
            c.seeder.success_tolerance = s.value("success_tolerance", c.seeder.success_tolerance);
            c.seeder.failure_tolerance = s.value("failure_tolerance", c.seeder.failure_tolerance);
            c.seeder.seeds_kept = s.value("seeds_kept", c.seeder.seeds_kept);
            c.seeder.stop_after_feasible = s.value("stop_after_feasible", c.seeder.stop_after_feasible);
        }
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.chunk_size = j.value("chunk_size", c.chunk_size);
        c.normalized_screen = j.value("normalized_screen", c.normalized_screen);
        if (j.contains("ablation")) {
            const auto& a = j.at("ablation");
            c.ablation.ensemble_critic = a.value("ensemble_critic", true);
            c.ablation.mu_sigma = a.value("mu_sigma", true);
            c.ablation.reordering = a.value("reordering", true);
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.write_checkpoint = j.value("write_checkpoint", c.write_checkpoint);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    if (const char* env = std::getenv("GLOVA_WORKERS")) {
        const std::string v(env);
        if (v.empty() || v.size() > 6 || v.find_first_not_of("0123456789") != std::string::npos ||
            std::stoul(v) == 0)
            throw ConfigError("GLOVA_WORKERS must be a positive integer, got '" + v + "'");
        c.workers = std::stoul(v);
    }
    c.finalize();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto cfg = parse_run_config(j);
    // Relative bench paths resolve against the config file's directory.
    const auto rel = path.parent_path() / cfg.bench;
    if (!std::filesystem::exists(cfg.bench) && std::filesystem::exists(rel)) cfg.bench = rel.string();
    return cfg;
}

json to_json(const RunConfig& c) {
    json j;
    j["bench"] = c.bench;
    j["method"] = to_string(c.method);
    j["N"] = c.effective_samples();
    j["N_prime"] = c.effective_presamples();
    j["beta1"] = c.agent.beta1;
    j["beta2"] = c.beta2;
    j["agent"] = {{"hidden", c.agent.hidden},
                  {"ensemble_size", c.effective_agent().ensemble_size},
                  {"critic_lr", c.agent.critic_lr},
                  {"actor_lr", c.agent.actor_lr},
                  {"batch_size", c.agent.batch_size},
                  {"updates_per_iteration", c.agent.updates_per_iteration},
                  {"replay_capacity", c.agent.replay_capacity},
                  {"loss_bias", c.agent.loss_bias},
                  {"noise",
                   {{"sigma0", c.agent.noise.sigma0},
                    {"decay", c.agent.noise.decay},
                    {"sigma_min", c.agent.noise.sigma_min}}}};
    j["seeder"] = {{"budget", c.seeder.budget},
                   {"batch", c.seeder.batch},
                   {"init_half_width", c.seeder.init_half_width},
                   {"min_half_width", c.seeder.min_half_width},
                   {"success_tolerance", c.seeder.success_tolerance},
                   {"failure_tolerance", c.seeder.failure_tolerance},
                   {"seeds_kept", c.seeder.seeds_kept},
                   {"stop_after_feasible", c.seeder.stop_after_feasible}};
    j["max_iterations"] = c.max_iterations;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["chunk_size"] = c.chunk_size;
    j["normalized_screen"] = c.normalized_screen;
    j["ablation"] = {{"ensemble_critic", c.ablation.ensemble_critic},
                     {"mu_sigma", c.ablation.mu_sigma},
                     {"reordering", c.ablation.reordering}};
    return j;
}

}  // namespace glova
