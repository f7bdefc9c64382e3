#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "glova/agent.hpp"
#include "glova/bench.hpp"
#include "glova/orchestrator.hpp"
#include "glova/verify.hpp"

using namespace glova;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

void randomize(Mlp& net, RngStream& rng, double scale) {
    auto flat = net.flatten();
    for (auto& v : flat) v = scale * rng.normal();
    net.assign(flat);
}

template <typename Loss>
std::vector<double> numeric_gradient(Mlp& net, Loss&& loss) {
    constexpr double step = 1e-6;
    auto flat = net.flatten();
    std::vector<double> g(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + step;
        net.assign(flat);
        const double up = loss();
        flat[i] = keep - step;
        net.assign(flat);
        const double down = loss();
        flat[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    net.assign(flat);
    return g;
}

MismatchCondition nominal(std::size_t r) { return {std::vector<double>(r, 0.0), std::vector<double>(r, 0.0)}; }

// Designs that meet every corner at nominal mismatch yet fail full verification.
struct Planted {
    DesignVector x;
    std::uint64_t attempt = 0;
};

std::vector<Planted> planted_failures(const Benchmark& bench, VerificationMethod method, std::size_t count) {
    const auto corners = enumerate_corners(method, bench.corners);
    const MismatchSampler sampler(bench.space, bench.variance, method);
    RngStream rng(2024, "acceptance-candidates");
    std::vector<Planted> out;
    VerifyConfig vc;
    vc.mu_sigma = false;
    for (std::uint64_t tried = 0; out.size() < count && tried < 1000000; ++tried) {
        std::vector<double> xv(bench.space.dimension());
        for (auto& v : xv) v = rng.uniform();
        const DesignVector x(xv);
        const bool nominal_ok = std::all_of(corners.begin(), corners.end(), [&](const PvtCorner& t) {
            return reward(bench.evaluator->evaluate(x, t, nominal(sampler.dimension()))).success();
        });
        if (!nominal_ok) continue;
        vc.reordering = false;
        const auto o = run_verification(x, {*bench.evaluator, sampler, bench.constraints, corners, vc, 0, tried});
        if (o.verdict != Verdict::passed && o.trace.back().phase == 2) out.push_back({x, tried});
    }
    return out;
}

// 1
Outcome sampler_moments() {
    const auto t0 = Clock::now();
    const std::size_t r = 4;
    const std::vector<double> local(r, 0.2), global(r, 0.1);  // variances 0.04 and 0.01
    RngStream rng(1, "acceptance-sampler");
    std::vector<double> sum(r, 0.0), sq(r, 0.0);
    const std::size_t sets = 1000, per_set = 100;
    for (std::size_t s = 0; s < sets; ++s)
        for (const auto& c : sample_mismatch_set(local, global, per_set, VerificationMethod::CMCGL, rng))
            for (std::size_t d = 0; d < r; ++d) {
                sum[d] += c.h[d];
                sq[d] += c.h[d] * c.h[d];
            }
    const double n = static_cast<double>(sets * per_set);
    double worst_var = 0.0;
    bool ok = true;
    for (std::size_t d = 0; d < r; ++d) {
        const double var = sq[d] / n - (sum[d] / n) * (sum[d] / n);
        const double rel = std::abs(var - 0.05) / 0.05;
        worst_var = std::max(worst_var, rel);
        ok = ok && rel <= 0.05;
    }
    // RMS of (set mean - h1) should track 0.2 / sqrt(n)
    double worst_shrink = 0.0;
    for (std::size_t m : {4u, 16u, 64u, 256u}) {
        double acc = 0.0;
        const std::size_t reps = 400;
        for (std::size_t s = 0; s < reps; ++s) {
            const auto set = sample_mismatch_set(local, global, m, VerificationMethod::CMCGL, rng);
            for (std::size_t d = 0; d < r; ++d) {
                double mean = 0.0;
                for (const auto& c : set) mean += c.h[d];
                mean /= static_cast<double>(m);
                acc += (mean - set.front().global[d]) * (mean - set.front().global[d]);
            }
        }
        const double rms = std::sqrt(acc / static_cast<double>(reps * r));
        const double rel = std::abs(rms / (0.2 / std::sqrt(static_cast<double>(m))) - 1.0);
        worst_shrink = std::max(worst_shrink, rel);
        ok = ok && rel <= 0.1;
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 10.0;
    return {ok, fmt("pooled variance rel err %.4f (<=0.05), 1/sqrt(n) rel err %.4f (<=0.1), %.2f s", worst_var,
                    worst_shrink, secs)};
}

// 2
Outcome reward_critic_invariants() {
    RngStream rng(2, "acceptance-invariants");
    std::size_t cases = 0, violations = 0;
    for (int t = 0; t < 7000; ++t, ++cases) {
        const std::size_t m = 1 + rng.index(6);
        std::vector<double> f(m);
        for (auto& v : f) v = rng.uniform() < 0.3 ? std::abs(rng.normal()) : rng.normal();
        const double r = reward(f).value;
        const bool met = std::all_of(f.begin(), f.end(), [](double v) { return v >= 0.0; });
        bool ok = r <= kSuccessReward && ((r == kSuccessReward) == met);
        auto worse = f;
        const std::size_t i = rng.index(m);
        worse[i] -= std::abs(rng.normal()) + 1e-3;
        ok = ok && reward(worse).value <= r;
        if (worse[i] < 0.0) ok = ok && reward(worse).value < r;
        violations += !ok;
    }
    AgentConfig cfg;
    cfg.hidden = {8, 8};
    for (int t = 0; t < 3000; ++t, ++cases) {
        const std::size_t p = 1 + rng.index(5);
        cfg.ensemble_size = 1 + rng.index(6);
        cfg.beta1 = -5.0 * rng.uniform() - 1e-3;
        CriticEnsemble critic(p, cfg, rng);
        for (auto& model : critic.models) randomize(model, rng, 0.5);
        std::vector<double> xv(p);
        for (auto& v : xv) v = rng.uniform();
        const DesignVector x(xv);
        const Eigen::MatrixXd out = critic.base_outputs(to_matrix(std::span(&x, 1)));
        const double agg = critic_aggregate(critic, x);
        bool ok = agg <= out.mean() + 1e-12;
        if (critic.size() == 1) ok = ok && agg == critic.models[0].forward(to_matrix(std::span(&x, 1)))(0, 0);
        violations += !ok;
    }
    return {violations == 0, fmt("%zu cases, %zu violations", cases, violations)};
}

// 3
Outcome gradient_checks() {
    RngStream rng(3, "acceptance-gradients");
    AgentConfig cfg;
    cfg.hidden = {16, 16, 16};
    double worst = 0.0;
    const int instances = 100;
    for (int t = 0; t < instances; ++t) {
        const std::size_t p = 2 + rng.index(13);
        cfg.ensemble_size = 1 + rng.index(5);
        Actor actor(p, cfg, rng);
        CriticEnsemble critic(p, cfg, rng);
        randomize(actor.net, rng, 0.4);
        for (auto& m : critic.models) randomize(m, rng, 0.4);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(p), 4);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform();
        Eigen::RowVectorXd y(4);
        for (Eigen::Index i = 0; i < 4; ++i) y(i) = rng.normal();

        MlpGradient gc;
        critic_loss(critic.models[0], x, y, 0.0, &gc);
        const auto nc = numeric_gradient(critic.models[0], [&] { return critic_loss(critic.models[0], x, y, 0.0, nullptr); });
        worst = std::max(worst, relative_error(flatten(gc), nc));

        MlpGradient ga;
        actor_loss(actor.net, critic, x, 0.0, &ga);
        const auto na = numeric_gradient(actor.net, [&] { return actor_loss(actor.net, critic, x, 0.0, nullptr); });
        worst = std::max(worst, relative_error(flatten(ga), na));
    }
    return {worst < 1e-4, fmt("%d actor + %d critic instances, max relative error %.3g (<1e-4)", instances,
                              instances, worst)};
}

// 4
Outcome pearson_oracles(const Benchmark& sal) {
    RngStream rng(4, "acceptance-pearson");
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.index(100), r = 1 + rng.index(8), m = 1 + rng.index(4);
        std::vector<MismatchCondition> conds(n);
        std::vector<PerformanceVector> res(n);
        std::vector<double> g(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            conds[k].h.resize(r);
            conds[k].global.assign(r, 0.0);
            for (auto& v : conds[k].h) v = rng.normal();
            res[k].raw.assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                res[k].normalized.push_back(rng.normal() + 0.5 * conds[k].h[i % r]);
                g[k] -= res[k].normalized.back();
            }
        }
        const auto prof = pearson_profile(conds, res);
        for (std::size_t d = 0; d < r; ++d) {
            double mh = 0.0, mg = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                mh += conds[k].h[d];
                mg += g[k];
            }
            mh /= static_cast<double>(n);
            mg /= static_cast<double>(n);
            double num = 0.0, dh = 0.0, dg = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                num += (conds[k].h[d] - mh) * (g[k] - mg);
                dh += (conds[k].h[d] - mh) * (conds[k].h[d] - mh);
                dg += (g[k] - mg) * (g[k] - mg);
            }
            worst = std::max(worst, std::abs(prof.rho[d] - num / std::sqrt(dh * dg)));
        }
    }

    // Decile test: profile from the verifier's own N' presample, 10^4-sample MC oracle.
    const auto method = VerificationMethod::CMCL;
    const auto corners = enumerate_corners(method, sal.corners);
    const MismatchSampler sampler(sal.space, sal.variance, method);
    const auto designs = planted_failures(sal, method, 20);
    std::size_t top_fail = 0, bottom_fail = 0, top_n = 0, bottom_n = 0;
    for (const auto& d : designs) {
        VerifyConfig vc;
        vc.mu_sigma = false;
        const auto o = run_verification(d.x, {*sal.evaluator, sampler, sal.constraints, corners, vc, 0, d.attempt});
        const std::size_t j = *o.failing_corner;
        RngStream pre(0, "verify-presample", d.attempt, j);
        const auto pconds = sampler.sample(d.x, vc.presamples, pre);
        std::vector<PerformanceVector> pres;
        for (const auto& h : pconds) pres.push_back(sal.evaluator->evaluate(d.x, corners[j], h));
        const auto prof = pearson_profile(pconds, pres);
        RngStream mc(4, "acceptance-decile", d.attempt);
        const auto conds = sampler.sample(d.x, 10000, mc);
        std::vector<double> scores(conds.size());
        for (std::size_t k = 0; k < conds.size(); ++k) scores[k] = h_score(conds[k].h, prof);
        const auto order = descending_order(scores);
        const std::size_t decile = conds.size() / 10;
        for (std::size_t q = 0; q < decile; ++q) {
            top_fail += !reward(sal.evaluator->evaluate(d.x, corners[j], conds[order[q]])).success();
            bottom_fail += !reward(sal.evaluator->evaluate(d.x, corners[j], conds[order[order.size() - 1 - q]])).success();
        }
        top_n += decile;
        bottom_n += decile;
    }
    const double top_rate = static_cast<double>(top_fail) / static_cast<double>(std::max<std::size_t>(1, top_n));
    const double bottom_rate = static_cast<double>(bottom_fail) / static_cast<double>(std::max<std::size_t>(1, bottom_n));
    const bool ok = worst <= 1e-10 && designs.size() == 20 && top_rate > bottom_rate;
    return {ok, fmt("oracle max abs diff %.2g (<=1e-10); SAL decile failure rate top %.4f vs bottom %.4f over %zu designs",
                    worst, top_rate, bottom_rate, designs.size())};
}

// 5
Outcome reordering_effectiveness(const Benchmark& sal) {
    const auto t0 = Clock::now();
    const auto method = VerificationMethod::CMCL;
    const auto corners = enumerate_corners(method, sal.corners);
    const MismatchSampler sampler(sal.space, sal.variance, method);
    const auto designs = planted_failures(sal, method, 100);
    double scored = 0.0, shuffled = 0.0;
    std::size_t wins = 0;
    for (std::size_t s = 0; s < designs.size(); ++s) {
        VerifyConfig vc;
        vc.mu_sigma = false;
        const VerifyContext on{*sal.evaluator, sampler, sal.constraints, corners, vc, 0, designs[s].attempt};
        const auto a = run_verification(designs[s].x, on);
        vc.reordering = false;
        vc.random_order = true;
        const VerifyContext off{*sal.evaluator, sampler, sal.constraints, corners, vc, 0, designs[s].attempt};
        const auto b = run_verification(designs[s].x, off);
        scored += static_cast<double>(a.simulations);
        shuffled += static_cast<double>(b.simulations);
        wins += a.simulations < b.simulations;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, designs.size()));
    const double reduction = 1.0 - scored / shuffled;
    const double secs = seconds_since(t0);
    const bool ok = designs.size() == 100 && reduction >= 0.2 && secs < 300.0;
    return {ok, fmt("%zu paired seeds, mean sims to first failure %.1f scored vs %.1f random (%.1f%% reduction, "
                    "scored lower in %zu pairs), %.1f s",
                    designs.size(), scored / n, shuffled / n, 100.0 * reduction, wins, secs)};
}

RunConfig ocsa_config(std::uint64_t seed, AblationFlags flags) {
    RunConfig c;
    c.bench = "ocsa";
    c.method = VerificationMethod::CMCGL;
    c.samples = 100;
    c.presamples = 3;
    c.max_iterations = 1000;
    c.seed = seed;
    c.ablation = flags;
    return c;
}

struct Ablations {
    std::vector<RunReport> proposed, no_ec, no_mu, no_sr;
};

Ablations ocsa_ablations(const Benchmark& ocsa) {
    Ablations a;
    for (std::uint64_t s = 0; s < 20; ++s) {
        a.proposed.push_back(run(ocsa_config(s, {true, true, true}), ocsa).report);
        a.no_ec.push_back(run(ocsa_config(s, {false, true, true}), ocsa).report);
        a.no_mu.push_back(run(ocsa_config(s, {true, false, true}), ocsa).report);
        a.no_sr.push_back(run(ocsa_config(s, {true, false, false}), ocsa).report);
    }
    return a;
}

double mean_of(const std::vector<RunReport>& rs, const std::function<double(const RunReport&)>& f) {
    double s = 0.0;
    for (const auto& r : rs) s += f(r);
    return s / static_cast<double>(rs.size());
}

// 6
Outcome screening_value(const Ablations& a) {
    std::uint64_t with = 0, without = 0, candidates = 0;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.proposed.size(); ++i) {
        with += a.proposed[i].sims.verification;
        without += a.no_mu[i].sims.verification;
        candidates += a.proposed[i].iterations + a.no_mu[i].iterations;
        changed += a.proposed[i].verdict != a.no_mu[i].verdict;
    }
    const double reduction = 1.0 - static_cast<double>(with) / static_cast<double>(without);
    const bool ok = candidates >= 200 && reduction >= 0.3 && changed == 0;
    return {ok, fmt("OCSA CMCGL seeds 0..19, %llu candidate designs, verification sims %llu vs %llu without screening "
                    "(%.1f%% reduction, >=30%%), %zu run verdicts changed",
                    static_cast<unsigned long long>(candidates), static_cast<unsigned long long>(with),
                    static_cast<unsigned long long>(without), 100.0 * reduction, changed)};
}

// 7
Outcome end_to_end(const Benchmark& sal) {
    const auto t0 = Clock::now();
    int c_ok = 0, mc_ok = 0;
    std::uint64_t c_max = 0, mc_max = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        RunConfig c;
        c.bench = "sal";
        c.method = VerificationMethod::C;
        c.max_iterations = 200;
        c.seed = s;
        const auto r = run(c, sal).report;
        c_ok += r.success;
        c_max = std::max(c_max, r.iterations);
    }
    for (std::uint64_t s = 0; s < 10; ++s) {
        RunConfig c;
        c.bench = "sal";
        c.method = VerificationMethod::CMCL;
        c.samples = 100;
        c.presamples = 3;
        c.max_iterations = 1000;
        c.seed = s;
        const auto r = run(c, sal).report;
        mc_ok += r.success;
        mc_max = std::max(mc_max, r.iterations);
    }
    const double secs = seconds_since(t0);
    const bool ok = c_ok == 10 && mc_ok >= 9 && secs < 1800.0;
    return {ok, fmt("SAL C %d/10 (max %llu iterations), CMCL %d/10 (max %llu iterations), %.1f s", c_ok,
                    static_cast<unsigned long long>(c_max), mc_ok, static_cast<unsigned long long>(mc_max), secs)};
}

// 8
Outcome ablation_ordering(const Ablations& a) {
    auto total = [](const RunReport& r) { return static_cast<double>(r.sims.total()); };
    const double p = mean_of(a.proposed, total), ec = mean_of(a.no_ec, total), mu = mean_of(a.no_mu, total),
                 sr = mean_of(a.no_sr, total);
    auto passed = [](const std::vector<RunReport>& rs) {
        return std::count_if(rs.begin(), rs.end(), [](const RunReport& r) { return r.success; });
    };
    const bool ok = p <= ec && p <= mu && mu <= sr;
    return {ok, fmt("OCSA CMCGL mean total sims over 20 seeds: proposed %.1f, w/o EC %.1f, w/o mu-sigma %.1f, "
                    "w/o SR %.1f (passed %ld/%ld/%ld/%ld)",
                    p, ec, mu, sr, passed(a.proposed), passed(a.no_ec), passed(a.no_mu), passed(a.no_sr))};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9
Outcome determinism() {
    const auto root = fs::temp_directory_path() / "glova_acceptance_determinism";
    fs::remove_all(root);
    std::string verdicts[2];
    for (int i = 0; i < 2; ++i) {
        RunConfig c;
        c.bench = "sal";
        c.method = VerificationMethod::CMCL;
        c.max_iterations = 1000;
        c.seed = 7;
        c.workers = 1;
        c.output_dir = root / std::to_string(i);
        verdicts[i] = run(c).report.verdict;
    }
    bool same = verdicts[0] == verdicts[1];
    for (const char* f : {"iterations.csv", "verification_trace.csv", "checkpoint.bin"})
        same = same && slurp(root / "0" / f) == slurp(root / "1" / f) && !slurp(root / "0" / f).empty();
    fs::remove_all(root);
    return {same, fmt("two SAL CMCL runs, seed 7, 1 worker: logs %s, verdict %s", same ? "identical" : "differ",
                      verdicts[0].c_str())};
}

}  // namespace

int main() {
    const auto sal = resolve_benchmark("sal");
    const auto ocsa = resolve_benchmark("ocsa");
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    report(1, "sampler moments", sampler_moments());
    report(2, "reward/critic invariants", reward_critic_invariants());
    report(3, "gradient checks", gradient_checks());
    report(4, "Pearson/h-score oracles", pearson_oracles(sal));
    report(5, "reordering effectiveness", reordering_effectiveness(sal));
    const auto abl = ocsa_ablations(ocsa);
    report(6, "mu-sigma screening value", screening_value(abl));
    report(7, "end-to-end convergence", end_to_end(sal));
    report(8, "ablation ordering", ablation_ordering(abl));
    report(9, "determinism", determinism());
    std::printf("%d/9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
