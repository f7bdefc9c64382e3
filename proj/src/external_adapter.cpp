#include "glova/external_adapter.hpp"

#include <atomic>
#include <cerrno>
#include <charconv>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "glova/error.hpp"

extern char** environ;

namespace glova {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
    return s;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ExternalConfig parse_external_config(const nlohmann::json& j, const DesignSpace& space,
                                     const ConstraintSet& constraints,
                                     const VarianceModel& variance) {
    ExternalConfig c;
    c.command = j.at("command").get<std::string>();
    c.work_dir = j.value("work_dir", (std::filesystem::temp_directory_path() / "glova_ext").string());
    c.timeout = std::chrono::milliseconds(
        static_cast<long long>(j.value("timeout_s", 60.0) * 1000.0));
    c.keep_files = j.value("keep_files", false);
    c.space = space;
    c.constraints = constraints;
    for (const auto& d : variance.dims) c.mismatch_names.push_back(d.name);
    return c;
}

ExternalAdapter::ExternalAdapter(ExternalConfig config) : config_(std::move(config)) {
    if (config_.command.empty()) throw ConfigError("external adapter needs a command");
}

std::string ExternalAdapter::render_deck(const DesignVector& x, const PvtCorner& t,
                                         const MismatchCondition& h) const {
    if (h.h.size() != config_.mismatch_names.size())
        throw StructuralError("mismatch vector length does not match the adapter");
    const auto phys = denormalize(x, config_.space);
    std::string deck = "* glova parameter deck v1\n";
    for (std::size_t i = 0; i < phys.size(); ++i)
        deck += ".param " + config_.space.param(i).name + "=" + fmt_double(phys[i]) + "\n";
    deck += ".corner process=" + to_string(t.process) + " voltage=" + fmt_double(t.voltage) +
            " temperature=" + fmt_double(t.temperature) + "\n";
    for (std::size_t d = 0; d < h.h.size(); ++d)
        deck += ".mismatch " + config_.mismatch_names[d] + "=" + fmt_double(h.h[d]) + "\n";
    deck += ".end\n";
    return deck;
}

std::map<std::string, double> parse_measurements(const std::string& text) {
    std::map<std::string, double> out;
    std::istringstream in(text);
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string name, value, extra;
        if (!(ls >> name)) continue;
        if (!(ls >> value) || (ls >> extra))
            throw EvaluationError("measurement line " + std::to_string(lineno) +
                                  ": expected `name value`");
        double v = 0.0;
        const auto* end = value.data() + value.size();
        auto [ptr, ec] = std::from_chars(value.data(), end, v);
        if (ec != std::errc() || ptr != end)
            throw EvaluationError("measurement line " + std::to_string(lineno) +
                                  ": malformed number '" + value + "'");
        out[name] = v;
    }
    return out;
}

ProcessResult run_command(const std::string& command, std::chrono::milliseconds timeout,
                          const std::filesystem::path& log_file) {
    ProcessResult result;
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log_file.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);

    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        result.output = "posix_spawn failed: " + std::string(std::strerror(rc));
        return result;
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    for (;;) {
        const pid_t w = waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (!result.timed_out && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.output = read_file(log_file);
    return result;
}

PerformanceVector ExternalAdapter::evaluate(const DesignVector& x, const PvtCorner& t,
                                            const MismatchCondition& h) const {
    static std::atomic<std::uint64_t> counter{0};
    const auto id = std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1));
    std::filesystem::create_directories(config_.work_dir);
    const auto deck = config_.work_dir / ("deck_" + id + ".sp");
    const auto measure = config_.work_dir / ("measure_" + id + ".txt");
    const auto log = config_.work_dir / ("log_" + id + ".txt");
    {
        std::ofstream out(deck);
        out << render_deck(x, t, h);
        if (!out) throw EvaluationError("cannot write parameter deck " + deck.string());
    }

    auto cleanup = [&] {
        if (config_.keep_files) return;
        std::error_code ec;
        std::filesystem::remove(deck, ec);
        std::filesystem::remove(measure, ec);
        std::filesystem::remove(log, ec);
    };

    std::string cmd = replace_all(config_.command, "{deck}", deck.string());
    cmd = replace_all(cmd, "{measure}", measure.string());
    const auto proc = run_command(cmd, config_.timeout, log);
    if (proc.timed_out) {
        cleanup();
        throw EvaluationError("external simulator timed out", proc.output);
    }
    if (proc.exit_code != 0) {
        cleanup();
        throw EvaluationError("external simulator exited with code " +
                                  std::to_string(proc.exit_code),
                              proc.output);
    }

    std::map<std::string, double> values;
    try {
        if (!std::filesystem::exists(measure))
            throw EvaluationError("measurement file " + measure.string() + " was not written");
        values = parse_measurements(read_file(measure));
    } catch (const EvaluationError& e) {
        cleanup();
        throw EvaluationError(e.what(), proc.output);
    }
    std::vector<double> natural;
    for (const auto& name : config_.constraints.names()) {
        auto it = values.find(name);
        if (it == values.end()) {
            cleanup();
            throw EvaluationError("measurement '" + name + "' missing from simulator output",
                                  proc.output);
        }
        natural.push_back(it->second);
    }
    cleanup();
    return normalize_metrics(config_.constraints.fold(natural), config_.constraints);
}

}  // namespace glova
