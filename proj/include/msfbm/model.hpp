#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace msfbm {

// Thrown for malformed input (wrong shapes, non-finite entries), as opposed to
// inadmissible but well-formed parameters which are reported by validate().
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PairParams {
    double g = 0.0;
    double H_ij = 0.0;
    double lambda_i2 = 0.0;
    double lambda_j2 = 0.0;
    double H_i = 0.0;
    double H_j = 0.0;
    double T = 1.0;

    double xi() const;
    double Hbar() const { return 0.5 * (H_i + H_j); }
    double lambda_prod() const;
    bool diagonal() const { return H_ij == H_i && H_ij == H_j; }
    PairParams with_g(double new_g) const;
};

struct ModelParams {
    int d = 0;
    double T = 1.0;
    std::vector<double> H_diag;
    std::vector<double> lambda2_diag;
    Eigen::MatrixXd H_mat;
    Eigen::MatrixXd xi_mat;

    // Diagonals are read from the matrices.
    static ModelParams from_matrices(double T, const Eigen::MatrixXd& H, const Eigen::MatrixXd& xi);
    static ModelParams univariate(double T, double H, double lambda2);
    // Homogeneous d-asset model: common marginals, common off-diagonal (H_off, g).
    static ModelParams homogeneous(int d, double T, double H, double lambda2, double H_off, double g);

    PairParams pair(int i, int j) const;
    void check_structure() const;
};

struct Violation {
    std::string invariant;
    int i = -1;
    int j = -1;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate(const ModelParams& p, bool require_definite = false);
ValidationReport validate(const PairParams& p);
std::string format_report(const ValidationReport& r);

Eigen::MatrixXd g_from_xi(const ModelParams& p);
double mu_i(double lambda2, double H);

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
std::string dump_params(const ModelParams& p);
ModelParams load_params(const std::string& path);
void save_params(const ModelParams& p, const std::string& path);

}  // namespace msfbm
