#pragma once

#include "msfbm/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace msfbm {

enum class Provenance { GaussianField, LogvolMeasure, GaussianProxy, Market };

std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

struct FieldPanel {
    int d = 0;
    int N = 0;
    double Delta = 1.0;
    Eigen::MatrixXd data;  // d x N
    std::uint64_t seed = 0;
    Provenance provenance = Provenance::GaussianField;

    void check() const;
};

struct PricePanel {
    Eigen::MatrixXd X;  // d x (N + 1)
    std::vector<double> x0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd realized_logvar;  // d x N, ln(sum of squared sub-step increments / Delta); empty if substeps == 1
};

struct EmbeddingDiagnostics {
    long M = 0;
    std::vector<double> min_eigenvalue;  // per frequency
    double clipped_mass = 0.0;           // relative to total spectral mass
    bool exact = true;
    std::string flag() const;
};

struct EmbeddingError : std::runtime_error {
    EmbeddingDiagnostics diagnostics;
    EmbeddingError(const std::string& msg, EmbeddingDiagnostics d)
        : std::runtime_error(msg), diagnostics(std::move(d)) {}
};

struct SimulationResult {
    std::vector<FieldPanel> panels;
    EmbeddingDiagnostics diagnostics;
};

constexpr double kClipExact = 1e-6;
constexpr double kClipApprox = 1e-3;

// Shared spectral factorization of the field covariance on a circulant of size M.
class FieldSampler {
public:
    FieldSampler(const ModelParams& params, int N, double Delta);
    ~FieldSampler();
    FieldSampler(const FieldSampler&) = delete;
    FieldSampler& operator=(const FieldSampler&) = delete;

    const EmbeddingDiagnostics& diagnostics() const { return diag_; }
    int N() const { return N_; }
    int d() const { return d_; }
    double Delta() const { return Delta_; }
    // Two independent draws (real and imaginary parts) for synthesis index s.
    void draw_pair(std::uint64_t seed, std::uint64_t s, Eigen::MatrixXd& re, Eigen::MatrixXd& im) const;

private:
    int d_, N_;
    long M_;
    double Delta_;
    std::vector<double> factors_;  // per frequency d x d, column-major
    void* plan_ = nullptr;
    EmbeddingDiagnostics diag_;
};

// workers <= 0: runtime default; workers == 1: serial path loop
SimulationResult simulate_field(const ModelParams& params, int N, double Delta, std::uint64_t seed, int n_paths,
                                int workers = 0);

// field mean making E[exp(omega_i + mu_i)] = 1 (log-kernel marginals use the cutoff ell = Delta)
std::vector<double> field_means(const ModelParams& params, double Delta);

FieldPanel field_to_measure(const FieldPanel& panel, const ModelParams& params, int agg);
FieldPanel field_to_gaussian_proxy(const FieldPanel& panel, const ModelParams& params, int agg);
PricePanel simulate_prices(const FieldPanel& measure_panel, const std::vector<double>& x0, std::uint64_t seed,
                           int substeps = 1);

}  // namespace msfbm
