#pragma once

#include "msfbm/model.hpp"

#include <vector>

namespace msfbm {

constexpr int kWickMaxOrder = 16;

// E[X_1 ... X_n] for a centered Gaussian vector (sum over perfect matchings).
double wick_moment(const Eigen::MatrixXd& cov);

struct Interval {
    int marginal = 0;
    double start = 0.0;
    double length = 1.0;
};

// Leading small-intermittency term of E[prod_k ln(M_{i_k}(I_k)/|I_k|)]:
// the Wick moment of the matrix lambda_i lambda_j cov(Omega_i(I)/|I|, Omega_j(J)/|J|).
double sia_generalized_moment(const std::vector<Interval>& intervals, const ModelParams& params);

// lambda_i lambda_j cov(Omega_i(I)/|I|, Omega_j(J)/|J|) for every pair of intervals
Eigen::MatrixXd interval_cov_matrix(const std::vector<Interval>& intervals, const ModelParams& params);

}  // namespace msfbm
