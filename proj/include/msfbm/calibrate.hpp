#pragma once

#include "msfbm/curve.hpp"
#include "msfbm/model.hpp"
#include "msfbm/moments.hpp"
#include "msfbm/optimize.hpp"
#include "msfbm/simulate.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace msfbm {

enum class Residual { C, D };

struct GmmOptions {
    MomentModelOptions model;
    Residual residual = Residual::C;
    bool two_step = true;  // identity weight, then Newey-West weight
    int bandwidth = -1;    // -1: floor(N^{1/3})
    NmOptions nm;
    double T_max_factor = 64.0;  // free T ranges over [N Delta, factor N Delta]
    std::optional<Eigen::MatrixXd> weight;  // fixed second-stage weight instead of Newey-West
};

struct GmmResult {
    std::map<std::string, double> params;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd W;
    bool weight_fallback = false;
    CovCurve residual;
    std::string error;  // non-empty when the fit could not be run

    nlohmann::json to_json() const;
};

GmmResult calibrate_univariate(const std::vector<double>& logvol, double Delta, const LagGrid& grid,
                               std::optional<double> fix_T, const GmmOptions& opt = {},
                               const std::vector<unsigned char>* mask = nullptr);

GmmResult calibrate_pair(const std::vector<double>& x, const std::vector<double>& y, double lambda_i2,
                         double lambda_j2, double H_i, double H_j, double Delta, const LagGrid& grid, double T,
                         const GmmOptions& opt = {}, const std::vector<unsigned char>* mask = nullptr);

struct PanelCalibration {
    ModelParams estimate;
    std::vector<GmmResult> marginals;
    std::map<std::pair<int, int>, GmmResult> pairs;
    std::vector<double> xi_eigenvalues;
    int failed_pairs = 0;
    int total_pairs = 0;
};

// Masked entries (1 = excluded) follow the data layout d x N when given.
PanelCalibration calibrate_panel(const FieldPanel& panel, const LagGrid& grid, double T, const GmmOptions& opt = {},
                                 const std::vector<std::vector<unsigned char>>* masks = nullptr, int workers = 0);

}  // namespace msfbm
