#pragma once

#include "msfbm/model.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msfbm::cli {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kEmbedding = 3, kDegraded = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegradedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resolution order: built-in defaults, then the JSON config file, then flags.
// MSFBM_WORKERS, when set, replaces the worker count from every other source.
struct RunConfig {
    std::string subcommand;
    std::string config_dir;  // relative paths in the config file resolve against it

    std::string params_path;
    std::optional<nlohmann::json> params_inline;

    int N = 16384;
    double Delta = 1.0;
    std::uint64_t seed = 1;
    int replicas = 1;
    int agg = 16;
    int Q = 19;
    std::optional<double> T;  // default: params T, or N Delta for calibrate
    std::string outdir = ".";
    std::string format = "csv";  // csv | json | binary
    std::string proxy = "gaussian";
    int workers = 0;

    // estimation
    std::string residual = "C";
    std::string sampling = "continuous";
    bool two_step = true;
    std::vector<int> N_list;

    // simulate
    int substeps = 1;
    std::vector<double> x0;

    // covariance
    std::vector<int> pair;
    std::vector<int> lags;

    // calibrate
    std::string panel;

    // analyze-index
    std::vector<double> weights;
    std::vector<double> taus;
    std::vector<double> ratios;  // Delta / tau
    std::optional<double> H, Hprime;

    nlohmann::json to_json() const;
    void apply_json(const nlohmann::json& j);
    void check() const;
    ModelParams load_model() const;
    std::string resolve(const std::string& path) const;
};

int resolve_workers(int configured);

int cmd_simulate(const RunConfig& c);
int cmd_covariance(const RunConfig& c);
int cmd_calibrate(const RunConfig& c);
int cmd_mc_validate(const RunConfig& c);
int cmd_analyze_index(const RunConfig& c);

}  // namespace msfbm::cli
