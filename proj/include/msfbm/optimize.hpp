#pragma once

#include <Eigen/Dense>

#include <functional>

namespace msfbm {

struct NmOptions {
    double size_tol = 1e-8;  // simplex diameter
    int max_iter = 500;
    double initial_step = 0.5;
    int restarts = 1;  // fresh simplexes around the best point after convergence
};

struct NmResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

NmResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NmOptions& opt = {});

double logistic(double x);
double logit(double p);

}  // namespace msfbm
