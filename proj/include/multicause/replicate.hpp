#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multicause/harness.hpp"

namespace multicause {

/// Canonical desk-scale designs: med1, subset, quadratic, logistic.
const std::vector<std::string> &replicate_designs();

struct ReplicateOptions {
    std::optional<Index> n;     // design default when unset
    std::optional<Index> reps;  // design default when unset
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// One cell of a replication grid. Every run of a design shares the root
/// seed, so settings differ only in the parameter being varied.
struct ReplicateRun {
    std::string setting;  // label prefix, e.g. "b1=-0.3", "const10/m=50", "rho=0.4"
    std::string group;    // quadratic: "rho" or "m"; empty otherwise
    double x = 0.0;
    ExperimentConfig config;
    SimulationSummary summary;
};

struct ReplicateResult {
    std::string design;
    std::vector<ReplicateRun> runs;
    std::string table;
    std::vector<std::pair<std::string, std::string>> extra_files;  // file name, content

    const ReplicateRun &run(const std::string &setting) const;

    /// All runs as one summary, estimator labels prefixed "setting/".
    SimulationSummary combined() const;
};

/// The configurations a design runs, without running them. Throws
/// ConfigError for an unknown design or invalid options.
std::vector<ReplicateRun> replicate_plan(const std::string &design, const ReplicateOptions &opt);

/// Runs the plan and renders the text table (plus series CSV and SVG files
/// for quadratic).
ReplicateResult replicate(const std::string &design, const ReplicateOptions &opt);

/// Rendering only; `runs` must come from replicate_plan(design) with summaries filled.
ReplicateResult render_replicate(const std::string &design, std::vector<ReplicateRun> runs);

}  // namespace multicause
