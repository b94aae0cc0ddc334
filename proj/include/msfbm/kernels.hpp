#pragma once

#include "msfbm/model.hpp"

namespace msfbm {

struct KernelArgs {
    double tau = 0.0;
    double Delta = 1.0;
    PairParams pair;
};

// Stationary covariance c(x) of one (i, j) entry of the log-volatility field,
// together with its double antiderivative, so that integrals of c(v - u) over
// arbitrary rectangles are exact, including lags past the support edge T.
class CovKernel {
public:
    // c(x) = xi [A - (x/T)^{2H}/(2H(1-2H)) - (x/T)(2H - 2Hbar)/((2H-1)(1-2Hbar))] on [0, T]
    static CovKernel power(const PairParams& p);
    // c(x) = -xi ln(x/T) on [ell, T], linear cap on [0, ell)
    static CovKernel log(double xi, double ell, double T);
    // power kernel when H_ij > 0, log kernel with cutoff ell otherwise
    static CovKernel for_pair(const PairParams& p, double ell);

    double operator()(double x) const;
    // int_a^{a+la} int_b^{b+lb} c(v - u) dv du
    double rect(double a, double la, double b, double lb) const;
    // rect(0, Delta, tau, Delta); second-order expansion when Delta/tau < 1e-4
    double block(double tau, double Delta) const;
    // exact covariance of left-endpoint Riemann block averages of the sampled
    // field: blocks of n points spaced h, lag tau (a multiple of h)
    double riemann_block(double tau, double h, int n) const;

    bool is_log() const { return log_; }
    double T() const { return T_; }
    // c(x) = c0 - K x^{2H} - L x on [0, T] for the power kernel
    double c0() const { return c0_; }
    double K() const { return K_; }
    double L() const { return L_; }
    double H() const { return H_; }

private:
    double second_antideriv(double x) const;
    bool log_ = false;
    double T_ = 1.0;
    double H_ = 0.0;
    double c0_ = 0.0, K_ = 0.0, L_ = 0.0;
    double xi_ = 0.0, ell_ = 0.0;
};

double msfbm_cross_cov(double tau, const PairParams& p);
double log_kernel_cov(double tau, double ell, double xi, double T);
double noise_correlation(double h, const PairParams& p);

// (1 / (lambda_i lambda_j)) int_0^Delta int_tau^{tau+Delta} C^omega_ij(v - u) dv du
double integrated_cov(const KernelArgs& a);
// same quantity for arbitrary intervals [a, a+la] and [b, b+lb], any position
double interval_cov(double a, double la, double b, double lb, const PairParams& p);

// 2 (C(0) - C(tau)) / Delta^2 with C = integrated_cov, i.e. 2 g phi~(Delta/tau)
double logvol_incr_cov(const KernelArgs& a);
double logvol_incr_corr(double tau, double Delta, const PairParams& p);

struct SeriesResult {
    double value = 0.0;
    double last_term_rel = 0.0;
    int terms = 0;
    bool converged = false;
};

// E[M_i(0, Delta) M_j(tau, tau + Delta)] for the normalized exponential measures
SeriesResult mrm_cross_cov_series(double tau, double Delta, const PairParams& p, int n_terms = 200,
                                  double tol = 1e-12);
double mrm_cross_cov_sia(double tau, double Delta, const PairParams& p);

double zeta_exponent(double p, double q, double xi_ij);

}  // namespace msfbm
