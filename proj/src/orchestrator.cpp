#include "glova/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "glova/binary_io.hpp"
#include "glova/error.hpp"

namespace glova {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_design(const DesignVector& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ' ';
        s += fmt(x[i]);
    }
    return s;
}

class OutputFiles {
public:
    explicit OutputFiles(const std::filesystem::path& dir) : dir_(dir) {
        if (dir_.empty()) return;
        std::filesystem::create_directories(dir_);
        iterations_.open(dir_ / "iterations.csv");
        trace_.open(dir_ / "verification_trace.csv");
        if (!iterations_ || !trace_)
            throw Error("cannot open output files in " + dir_.string());
        iterations_ << kIterationCsvHeader << '\n';
        trace_ << kTraceCsvHeader << '\n';
        iterations_.flush();
        trace_.flush();
    }

    bool enabled() const { return !dir_.empty(); }
    const std::filesystem::path& dir() const { return dir_; }

    void iteration(const IterationLogRow& row) {
        if (!enabled()) return;
        iterations_ << format_csv_row(row) << '\n';
        iterations_.flush();
    }

    void trace(std::uint64_t attempt, const VerificationOutcome& o,
               const std::vector<PvtCorner>& corners) {
        if (!enabled()) return;
        for (const auto& t : o.trace)
            trace_ << attempt << ',' << t.phase << ',' << corners[t.corner].label() << ','
                   << t.condition << ',' << fmt(t.h_score) << ',' << fmt(t.reward) << ','
                   << (t.reused ? 1 : 0) << ',' << t.cumulative << '\n';
        trace_.flush();
    }

    void result(const json& j) {
        if (!enabled()) return;
        std::ofstream out(dir_ / "result.json");
        out << j.dump(2) << '\n';
        if (!out) throw Error("cannot write " + (dir_ / "result.json").string());
    }

private:
    std::filesystem::path dir_;
    std::ofstream iterations_;
    std::ofstream trace_;
};

constexpr std::uint64_t kRunMagic = 0x4e5552564f4c47ULL;  // "GLOVRUN"
constexpr std::uint32_t kRunVersion = 1;

}  // namespace

std::string format_csv_row(const IterationLogRow& row) {
    std::ostringstream os;
    os << row.iteration << ',' << row.corner << ',' << fmt(row.worst_reward) << ','
       << fmt(row.critic_loss) << ',' << fmt(row.actor_loss) << ',' << (row.gated ? 1 : 0) << ','
       << row.verdict << ',' << row.cumulative_sims << ',' << join_design(row.x);
    return os.str();
}

json RunReport::to_json(const Benchmark& bench, const RunConfig& cfg) const {
    json j;
    j["format"] = "glova-result-v1";
    j["verdict"] = verdict;
    j["success"] = success;
    if (!error.empty()) j["error"] = error;
    j["bench"] = bench.name;
    j["method"] = to_string(cfg.method);
    j["seed"] = cfg.seed;
    j["iterations"] = iterations;
    j["verification_attempts"] = verification_attempts;
    j["seeding_succeeded"] = seeding_succeeded;
    j["simulations"] = {{"seeding", sims.seeding},
                        {"initialization", sims.initialization},
                        {"optimization", sims.optimization},
                        {"verification", sims.verification},
                        {"total", sims.total()}};
    j["evaluator_calls"] = evaluator_calls;
    j["wall_seconds"] = wall_seconds;
    json phys = json::object();
    for (std::size_t i = 0; i < physical.size() && i < bench.space.dimension(); ++i)
        phys[bench.space.param(i).name] = physical[i];
    j["design"] = {{"normalized", std::vector<double>(design.values().begin(), design.values().end())},
                   {"physical", phys}};
    j["iteration_log"] = iteration_log.string();
    j["config"] = glova::to_json(cfg);
    return j;
}

void save_checkpoint(const std::filesystem::path& path, const Agent& agent, std::uint64_t iteration,
                     const SimulationCounts& sims, std::uint64_t attempts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    bin::put(out, kRunMagic);
    bin::put(out, kRunVersion);
    bin::put(out, iteration);
    bin::put(out, sims.seeding);
    bin::put(out, sims.initialization);
    bin::put(out, sims.optimization);
    bin::put(out, sims.verification);
    bin::put(out, attempts);
    agent.save(out);
    if (!out) throw Error("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StateError("cannot open checkpoint " + path.string());
    if (bin::get<std::uint64_t>(in) != kRunMagic) throw StateError(path.string() + " is not a run checkpoint");
    if (bin::get<std::uint32_t>(in) != kRunVersion) throw StateError("unsupported checkpoint version");
    Checkpoint c;
    c.iteration = bin::get<std::uint64_t>(in);
    c.sims.seeding = bin::get<std::uint64_t>(in);
    c.sims.initialization = bin::get<std::uint64_t>(in);
    c.sims.optimization = bin::get<std::uint64_t>(in);
    c.sims.verification = bin::get<std::uint64_t>(in);
    c.attempts = bin::get<std::uint64_t>(in);
    c.agent = Agent::load(in);
    return c;
}

RunResult run(const RunConfig& config) { return run(config, resolve_benchmark(config.bench)); }

RunResult run(const RunConfig& config_in, const Benchmark& bench) {
    RunConfig cfg = config_in;
    cfg.finalize();
    const auto t0 = std::chrono::steady_clock::now();

    const auto corners = enumerate_corners(cfg.method, cfg.corners.value_or(bench.corners));
    auto counter = std::make_shared<CountingEvaluator>(bench.evaluator);
    const MismatchSampler sampler(bench.space, bench.variance, cfg.method);
    const std::size_t p = bench.space.dimension();

    RunResult result;
    auto& report = result.report;
    OutputFiles files(cfg.output_dir);
    if (files.enabled()) report.iteration_log = files.dir() / "iterations.csv";

    Agent agent;
    std::uint64_t start = 0;
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    try {
        if (!cfg.resume_from.empty()) {
            auto ck = load_checkpoint(cfg.resume_from);
            if (ck.agent.last_worst.corners() != corners)
                throw ConfigError("checkpoint corners do not match the configured method/grid");
            agent = std::move(ck.agent);
            start = ck.iteration;
            report.sims = ck.sims;
            report.verification_attempts = ck.attempts;
            report.seeding_succeeded = true;
        } else {
            RngStream seed_rng(cfg.seed, "seeder");
            const auto seeded = seed_designs(*counter, bench.typical, p, cfg.seeder, seed_rng, cfg.workers);
            report.sims.seeding = counter->calls();
            report.seeding_succeeded = seeded.succeeded();
            const auto seeds = seeded.top(cfg.seeder.seeds_kept);

            agent = Agent(p, corners, cfg.effective_agent(), cfg.seed);
            if (!seeds.empty()) {
                initialize_buffers(seeds, *counter, sampler, corners, cfg.effective_presamples(),
                                   agent.replay, agent.last_worst, cfg.seed, cfg.workers);
                agent.x_last = seeds.front().x;
            } else if (cfg.max_iterations > 0) {
                throw ConfigError("seeding evaluated no designs; increase the seeding budget");
            }
            report.sims.initialization = counter->calls() - report.sims.seeding;
        }
        const std::uint64_t base_calls = counter->calls();
        const std::uint64_t base_total = report.sims.total();
        report.design = agent.x_last;
        report.iterations = start;

        const TrainStepContext tctx{*counter, sampler, cfg.effective_presamples(), cfg.workers, cfg.seed};
        const auto vcfg = cfg.verify_config();

        for (std::uint64_t it = start + 1; it <= cfg.max_iterations; ++it) {
            auto before = counter->calls();
            const auto rec = train_step(agent, tctx, it);
            report.sims.optimization += counter->calls() - before;

            IterationLogRow row;
            row.iteration = it;
            row.corner = corners[rec.corner].label();
            row.worst_reward = rec.worst_reward;
            row.critic_loss = rec.critic_losses.empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : std::accumulate(rec.critic_losses.begin(), rec.critic_losses.end(), 0.0) /
                                        static_cast<double>(rec.critic_losses.size());
            row.actor_loss = rec.actor_loss.value_or(std::numeric_limits<double>::quiet_NaN());
            row.x = rec.x_new;
            row.gated = gate_for_verification(rec.results, bench.constraints, vcfg);

            if (row.gated) {
                ++report.verification_attempts;
                const Presample presample{rec.corner, rec.conditions, rec.results};
                const VerifyContext vctx{*counter, sampler, bench.constraints, corners, vcfg, cfg.seed, it};
                before = counter->calls();
                const auto outcome = run_verification(rec.x_new, vctx, &agent.last_worst, &presample);
                report.sims.verification += counter->calls() - before;
                files.trace(it, outcome, corners);
                row.verdict = to_string(outcome.verdict);
                if (outcome.verdict == Verdict::passed) {
                    report.success = true;
                    report.design = rec.x_new;
                }
            }
            row.cumulative_sims = report.sims.total();
            files.iteration(row);
            result.log.push_back(row);
            report.iterations = it;
            if (!report.success) report.design = rec.x_new;
            if (report.success) break;
        }

        report.verdict = report.success ? "passed" : "failed";
        report.evaluator_calls = counter->calls() - base_calls + base_total;
        if (report.evaluator_calls != report.sims.total())
            throw StateError("simulation accounting mismatch");
        report.physical = denormalize(report.design, bench.space);
        report.wall_seconds = elapsed();
        if (files.enabled() && cfg.write_checkpoint)
            save_checkpoint(files.dir() / "checkpoint.bin", agent, report.iterations, report.sims,
                            report.verification_attempts);
        files.result(report.to_json(bench, cfg));
    } catch (const std::exception& e) {
        report.verdict = "aborted";
        report.error = e.what();
        report.wall_seconds = elapsed();
        if (report.design.size() == p) report.physical = denormalize(report.design, bench.space);
        try {
            files.result(report.to_json(bench, cfg));
        } catch (...) {
        }
        throw;
    }
    return result;
}

json CampaignSummary::to_json() const {
    json runs = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        runs.push_back({{"seed", seeds[i]},
                        {"verdict", r.verdict},
                        {"iterations", r.iterations},
                        {"simulations", r.sims.total()},
                        {"wall_seconds", r.wall_seconds}});
    }
    return {{"format", "glova-campaign-v1"},
            {"runs", runs},
            {"success_rate", success_rate},
            {"mean_rl_iterations", mean_iterations},
            {"mean_simulations", mean_simulations},
            {"mean_runtime_seconds", mean_runtime}};
}

CampaignSummary run_campaign(const RunConfig& base, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("campaign needs at least one seed");
    const auto bench = resolve_benchmark(base.bench);
    CampaignSummary s;
    std::size_t ok = 0;
    for (auto seed : seeds) {
        RunConfig cfg = base;
        cfg.seed = seed;
        if (!base.output_dir.empty()) cfg.output_dir = base.output_dir / ("seed_" + std::to_string(seed));
        auto r = run(cfg, bench);
        s.seeds.push_back(seed);
        if (r.report.success) {
            ++ok;
            s.mean_iterations += static_cast<double>(r.report.iterations);
            s.mean_simulations += static_cast<double>(r.report.sims.total());
            s.mean_runtime += r.report.wall_seconds;
        }
        s.reports.push_back(std::move(r.report));
    }
    s.success_rate = static_cast<double>(ok) / static_cast<double>(seeds.size());
    if (ok) {
        s.mean_iterations /= static_cast<double>(ok);
        s.mean_simulations /= static_cast<double>(ok);
        s.mean_runtime /= static_cast<double>(ok);
    }
    if (!base.output_dir.empty()) {
        std::filesystem::create_directories(base.output_dir);
        std::ofstream out(base.output_dir / "campaign.json");
        out << s.to_json().dump(2) << '\n';
    }
    return s;
}

VerificationOutcome verify_design(const RunConfig& config_in, const Benchmark& bench,
                                  const DesignVector& x) {
    RunConfig cfg = config_in;
    cfg.finalize();
    if (x.size() != bench.space.dimension())
        throw StructuralError("design has " + std::to_string(x.size()) + " values, bench expects " +
                              std::to_string(bench.space.dimension()));
    const auto corners = enumerate_corners(cfg.method, cfg.corners.value_or(bench.corners));
    const MismatchSampler sampler(bench.space, bench.variance, cfg.method);
    const VerifyContext ctx{*bench.evaluator, sampler, bench.constraints, corners,
                            cfg.verify_config(), cfg.seed, 0};
    return run_verification(x, ctx);
}

json to_json(const VerificationOutcome& o, const std::vector<PvtCorner>& corners) {
    json j;
    j["verdict"] = to_string(o.verdict);
    j["simulations"] = o.simulations;
    j["reused"] = o.reused;
    if (o.failing_corner) j["failing_corner"] = corners.at(*o.failing_corner).label();
    if (o.failing_condition) j["failing_condition"] = *o.failing_condition;
    json ts = json::object();
    for (std::size_t c = 0; c < o.t_scores.size(); ++c)
        if (o.t_scores[c]) ts[corners[c].label()] = *o.t_scores[c];
    j["t_scores"] = ts;
    return j;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    std::vector<std::uint64_t> out;
    try {
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (auto dots = part.find(".."); dots != std::string::npos) {
                const auto lo = std::stoull(part.substr(0, dots));
                const auto hi = std::stoull(part.substr(dots + 2));
                if (hi < lo) throw ConfigError("empty seed range '" + part + "'");
                for (auto s = lo; s <= hi; ++s) out.push_back(s);
            } else if (!part.empty()) {
                out.push_back(std::stoull(part));
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("malformed seed list '" + text + "'");
    }
    if (out.empty()) throw ConfigError("seed list is empty");
    return out;
}

}  // namespace glova
