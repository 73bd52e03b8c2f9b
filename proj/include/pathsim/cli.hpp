#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathsim/euler.hpp"
#include "pathsim/model.hpp"

namespace pathsim {

struct RunConfig {
    std::string model = "ou";
    std::string config_path;  // overrides `model` when set
    std::string algo = "auea";
    std::string inner = "auea";  // inner diffusion algorithm for bjea
    std::optional<double> horizon;
    std::uint64_t seed = 1;
    std::size_t reps = 1;
    std::optional<std::size_t> rounds;
    std::optional<double> epsilon;
    std::string out_dir;
    unsigned threads = 1;
    /// Staircase files are written for at most this many replications.
    std::size_t max_staircase_files = 1000;
};

/// The model the run refers to, with the horizon override applied.
Model resolve_model(const RunConfig& cfg);

/// Throws ConfigError for an unknown selector or one incompatible with the model.
void check_compatible(const RunConfig& cfg, const Model& m);

struct SimulateSummary {
    std::size_t reps = 0;
    double acceptance_rate = 0.0;  // accepted skeletons per diffusion proposal
    double mean_kappa = 0.0;
    std::size_t max_kappa = 0;
    double mean_jumps = 0.0, se_jumps = 0.0;
    double mean_terminal = 0.0, se_terminal = 0.0;
};

/// Writes skeletons.jsonl (one record per replication, in index order),
/// terminals.csv and summary.json to cfg.out_dir.
SimulateSummary cmd_simulate(const RunConfig& cfg);

/// Writes staircase_<rep>.csv, summary.json and, in round mode,
/// convergence.csv (n, mean_sup_gap, mean_l1_gap, scaled_l1).
void cmd_epsstrong(const RunConfig& cfg);

/// Writes oracle.csv (rep, terminal, jumps) and summary.json from the
/// fine-mesh Euler scheme; the output is labelled approximate.
void cmd_oracle(const RunConfig& cfg, const EulerOracleConfig& oracle);

/// Entry point; exit codes 0 ok, 2 configuration error, 3 numerical error.
int run_cli(int argc, char** argv);

} // namespace pathsim
