#include "msfbm/index.hpp"

#include "msfbm/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msfbm {

double unit_incr_cov(double H_ij, double H_i, double H_j, double T, double tau, double Delta) {
    if (!(tau > 0) || !(Delta > 0)) throw std::domain_error("tau and Delta must be positive");
    if (tau >= T || Delta >= T) throw std::domain_error("tau and Delta must be below T");
    PairParams p;
    p.g = 1;
    p.H_ij = H_ij;
    p.H_i = H_i;
    p.H_j = H_j;
    p.lambda_i2 = p.lambda_j2 = 1;
    p.T = T;
    CovKernel k = H_ij == 0 ? CovKernel::log(1.0, 1e-12 * Delta, T) : CovKernel::power(p);
    return 2 * (k.block(0, Delta) - k.block(tau, Delta)) / (Delta * Delta);
}

double phi_tilde(double H_ij, double H_i, double H_j, double T, double tau, double Delta) {
    return unit_incr_cov(H_ij, H_i, H_j, T, tau, Delta) / std::pow(tau / T, 2 * H_ij);
}

IndexVariance index_logvol_variance(const std::vector<double>& w, const ModelParams& p, double tau, double Delta) {
    p.check_structure();
    if (static_cast<int>(w.size()) != p.d) throw StructuralError("weights length differs from d");
    for (double a : w)
        if (!(a > 0)) throw std::domain_error("weights must be positive");
    if (!(tau > 0 && tau < p.T) || !(Delta > 0 && Delta < p.T)) throw std::domain_error("need 0 < tau, Delta < T");
    IndexVariance v;
    for (int i = 0; i < p.d; ++i) {
        for (int j = i; j < p.d; ++j) {
            double u = unit_incr_cov(p.H_mat(i, j), p.H_mat(i, i), p.H_mat(j, j), p.T, tau, Delta);
            double term = w[i] * w[i] * w[j] * w[j] * p.xi_mat(i, j) * u;
            if (i == j)
                v.residual += term;
            else
                v.factor += 2 * term;
        }
    }
    v.total = v.factor + v.residual;
    return v;
}

double f_alpha(double z, double alpha, double tau, double T) {
    double a2 = alpha + 2;
    double num;
    if (z < 1e-4)
        num = a2 * (a2 - 1) * z * z + a2 * (a2 - 1) * (a2 - 2) * (a2 - 3) * z * z * z * z / 12;
    else
        num = std::pow(1 + z, a2) + std::pow(std::abs(1 - z), a2) - 2;
    return std::pow(tau / T, alpha) * num / (z * z * (1 + alpha) * a2);
}

namespace {

double r_piece(double h, double Delta, double tau, double T) {
    double z = Delta / tau;
    return f_alpha(z, 2 * h, tau, T) / (2 * h * (2 * h - 1)) -
           std::pow(Delta / T, 2 * h) / (h * (1 + h) * (4 * h * h - 1));
}

}  // namespace

double r_ratio(double Hprime, double H, double Delta, double tau, double T) {
    return r_piece(Hprime, Delta, tau, T) / r_piece(H, Delta, tau, T);
}

double C_H(double H) { return H * (1 - 2 * H) * (1 + 2 * H) * (1 + H) / (2 * (std::pow(2.0, 2 * H) - 1)); }

RatioBound index_ratio_bound(double H, double Hprime, double Delta, double tau, double T, int d) {
    if (!(0 <= Hprime && Hprime < H && H < 0.5)) throw std::domain_error("need 0 <= H' < H < 1/2");
    if (!(0 < Delta && Delta < tau && tau < T)) throw std::domain_error("need 0 < Delta < tau < T");
    if (d < 1) throw std::domain_error("d must be >= 1");
    RatioBound b;
    b.C_H = C_H(H);
    b.limit = (d - 1) * std::pow(tau / T, 2 * H) * b.C_H * (3 - 2 * std::log(Delta / tau));
    b.finite = Hprime > 0 ? (d - 1) * std::pow(tau / T, 2 * (H - Hprime)) / r_ratio(Hprime, H, Delta, tau, T)
                          : std::numeric_limits<double>::quiet_NaN();
    b.exact = (d - 1) * unit_incr_cov(H, Hprime, Hprime, T, tau, Delta) /
              unit_incr_cov(Hprime, Hprime, Hprime, T, tau, Delta);
    return b;
}

}  // namespace msfbm
