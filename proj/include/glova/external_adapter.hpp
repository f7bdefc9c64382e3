#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "glova/bench.hpp"

namespace glova {

struct ExternalConfig {
    // Shell command; "{deck}" and "{measure}" are replaced by file paths.
    std::string command;
    std::filesystem::path work_dir;
    std::chrono::milliseconds timeout{60000};
    bool keep_files = false;
    DesignSpace space;
    ConstraintSet constraints;
    std::vector<std::string> mismatch_names;
};

ExternalConfig parse_external_config(const nlohmann::json& j, const DesignSpace& space,
                                     const ConstraintSet& constraints, const VarianceModel& variance);

/// Writes a parameter deck, runs an external simulator command and parses
/// the `name value` measurement file it produces. See docs/formats.md.
class ExternalAdapter final : public Evaluator {
public:
    explicit ExternalAdapter(ExternalConfig config);

    PerformanceVector evaluate(const DesignVector& x, const PvtCorner& t,
                               const MismatchCondition& h) const override;
    std::vector<std::string> metric_names() const override { return config_.constraints.names(); }
    std::size_t mismatch_dimension() const override { return config_.mismatch_names.size(); }

    std::string render_deck(const DesignVector& x, const PvtCorner& t,
                            const MismatchCondition& h) const;

private:
    ExternalConfig config_;
};

/// Parses `name value` lines; '#' starts a comment. Throws EvaluationError
/// with the 1-based line number on malformed values.
std::map<std::string, double> parse_measurements(const std::string& text);

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // combined stdout/stderr
};

ProcessResult run_command(const std::string& command, std::chrono::milliseconds timeout,
                          const std::filesystem::path& log_file);

}  // namespace glova
