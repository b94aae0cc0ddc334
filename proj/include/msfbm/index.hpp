#pragma once

#include "msfbm/model.hpp"

#include <vector>

namespace msfbm {

// cov(delta_tau Omega_i, delta_tau Omega_j) / Delta^2 at unit co-intermittency
// correlation, i.e. 2 phi~_ij(Delta/tau). Diagonal H = 0 uses the log kernel limit.
double unit_incr_cov(double H_ij, double H_i, double H_j, double T, double tau, double Delta);

// phi~ in the normalization V = sum alpha_i^2 alpha_j^2 xi_ij (tau/T)^{2H_ij} phi~_ij
double phi_tilde(double H_ij, double H_i, double H_j, double T, double tau, double Delta);

struct IndexVariance {
    double total = 0.0;
    double factor = 0.0;    // off-diagonal pairs
    double residual = 0.0;  // single-asset terms
};

IndexVariance index_logvol_variance(const std::vector<double>& weights, const ModelParams& params, double tau,
                                    double Delta);

// closed forms f(z, alpha) and r_{H', H}(z) behind the ratio bound
double f_alpha(double z, double alpha, double tau, double T);
double r_ratio(double Hprime, double H, double Delta, double tau, double T);
double C_H(double H);

struct RatioBound {
    double finite = 0.0;  // (d-1)(tau/T)^{2(H-H')} / r_{H',H}(Delta/tau); NaN when H' = 0
    double limit = 0.0;   // (d-1)(tau/T)^{2H} C_H (3 - 2 ln(Delta/tau))
    double C_H = 0.0;
    double exact = 0.0;   // (d-1)(tau/T)^{2(H-H')} phi~ / phi~' from the kernels, g = 1
};

RatioBound index_ratio_bound(double H, double Hprime, double Delta, double tau, double T, int d);

}  // namespace msfbm
