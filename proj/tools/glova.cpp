// glova command-line entry: run, campaign, verify.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "glova/error.hpp"
#include "glova/orchestrator.hpp"

namespace {

glova::DesignVector load_design(const std::string& path, const glova::Benchmark& bench) {
    std::ifstream in(path);
    if (!in) throw glova::ConfigError("cannot open design file " + path);
    nlohmann::json j;
    in >> j;
    // Accept either a bare design file or a result.json from a previous run.
    if (j.contains("design")) j = j.at("design");
    if (j.contains("normalized")) return glova::DesignVector(j.at("normalized").get<std::vector<double>>());
    if (j.contains("x")) return glova::DesignVector(j.at("x").get<std::vector<double>>());
    if (j.contains("physical")) {
        std::vector<double> x(bench.space.dimension());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto& p = bench.space.param(i);
            const double v = j.at("physical").at(p.name).get<double>();
            x[i] = p.scale == glova::ParamScale::log ? std::log(v / p.min) / std::log(p.max / p.min)
                                                     : (v - p.min) / (p.max - p.min);
        }
        return glova::DesignVector(std::move(x));
    }
    throw glova::ConfigError("design file needs an \"x\", \"normalized\" or \"physical\" entry");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variation-aware analog sizing with risk-sensitive RL"};
    app.require_subcommand(1);

    std::string config_path, mode, out_dir, seeds = "0..9", design_path;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string resume;

    auto* run_cmd = app.add_subcommand("run", "Optimize one design");
    run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    auto* seed_opt = run_cmd->add_option("--seed", seed, "Master seed");
    run_cmd->add_option("--mode", mode, "Verification method: C, CMCL or CMCGL");
    run_cmd->add_option("--out", out_dir, "Output directory");
    run_cmd->add_option("--workers", workers, "Evaluation worker threads");
    run_cmd->add_option("--resume", resume, "Resume from a checkpoint.bin");

    auto* campaign_cmd = app.add_subcommand("campaign", "Run independent seeds and aggregate");
    campaign_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    campaign_cmd->add_option("--seeds", seeds, "Seed list, e.g. 0..9 or 1,4,7");
    campaign_cmd->add_option("--mode", mode, "Verification method: C, CMCL or CMCGL");
    campaign_cmd->add_option("--out", out_dir, "Output directory");
    campaign_cmd->add_option("--workers", workers, "Evaluation worker threads");

    auto* verify_cmd = app.add_subcommand("verify", "Fully verify a given design");
    verify_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    verify_cmd->add_option("--design", design_path, "Design file (JSON)")->required();
    verify_cmd->add_option("--mode", mode, "Verification method: C, CMCL or CMCGL");
    auto* vseed_opt = verify_cmd->add_option("--seed", seed, "Master seed");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = glova::load_run_config(config_path);
        if (!mode.empty()) cfg.method = glova::parse_method(mode);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (workers > 0) cfg.workers = workers;
        if (*seed_opt || *vseed_opt) cfg.seed = seed;
        if (!resume.empty()) cfg.resume_from = resume;
        cfg.finalize();

        if (*run_cmd) {
            const auto result = glova::run(cfg);
            const auto& r = result.report;
            std::cout << "verdict " << r.verdict << "  iterations " << r.iterations << "  simulations "
                      << r.sims.total() << " (opt " << r.sims.seeding + r.sims.initialization + r.sims.optimization
                      << ", verif " << r.sims.verification << ")  " << r.wall_seconds << " s\n";
            return r.success ? 0 : 2;
        }
        if (*campaign_cmd) {
            const auto summary = glova::run_campaign(cfg, glova::parse_seed_range(seeds));
            std::cout << summary.to_json().dump(2) << '\n';
            return 0;
        }
        if (*verify_cmd) {
            const auto bench = glova::resolve_benchmark(cfg.bench);
            const auto x = load_design(design_path, bench);
            const auto outcome = glova::verify_design(cfg, bench, x);
            const auto corners = glova::enumerate_corners(cfg.method, cfg.corners.value_or(bench.corners));
            std::cout << glova::to_json(outcome, corners).dump(2) << '\n';
            return outcome.verdict == glova::Verdict::passed ? 0 : 2;
        }
    } catch (const glova::Error& e) {
        std::cerr << "glova: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
