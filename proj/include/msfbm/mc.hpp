#pragma once

#include "msfbm/calibrate.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace msfbm {

enum class ProxyMode { Gaussian, Measure };

struct McConfig {
    ModelParams truth;
    std::vector<int> N_list;  // simulated grid points per replica; agg must divide each
    int agg = 16;             // grid points per observation block
    double Delta = 1.0;       // grid step
    int replicas = 50;
    std::uint64_t seed = 1;
    ProxyMode proxy = ProxyMode::Gaussian;
    int Q = 19;
    GmmOptions gmm;
    int workers = 0;

    nlohmann::json to_json() const;
};

struct McCell {
    int N = 0;
    int n_obs = 0;
    std::uint64_t seed = 0;  // replica r uses synthesis r / 2 of this stream, part r % 2
    std::vector<int> replica;
    std::map<std::string, std::vector<double>> estimates;  // parameter -> one value per kept replica
    std::map<std::string, double> mean, std;
    int failures = 0;
    int unconverged = 0;
    std::vector<std::string> failure_messages;
};

struct McReport {
    nlohmann::json config;
    std::vector<McCell> cells;
    std::map<std::string, double> slope;  // ln(std) against ln(N), when >= 3 sizes
    bool std_defined = true;

    nlohmann::json to_json() const;
    std::string to_csv() const;  // replica,N,parameter,value
};

struct McHarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

McReport mc_validate(const McConfig& cfg);

// least-squares slope of y on x
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace msfbm
