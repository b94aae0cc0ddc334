#include "msfbm/kernels.hpp"

#include "msfbm/special.hpp"

#include <cmath>
#include <stdexcept>

namespace msfbm {

namespace {

void require_power(const PairParams& p) {
    if (p.H_ij == 0) throw std::domain_error("co-Hurst H_ij = 0: use the log kernel");
    if (!(p.H_ij > 0 && p.H_ij < 0.5)) throw std::domain_error("co-Hurst outside (0, 1/2)");
    if (!(p.T > 0)) throw std::domain_error("T must be positive");
}

}  // namespace

CovKernel CovKernel::power(const PairParams& p) {
    require_power(p);
    CovKernel k;
    double H = p.H_ij, Hb = p.Hbar(), xi = p.xi();
    k.T_ = p.T;
    k.H_ = H;
    k.c0_ = xi * (1 + 2 * H - 2 * Hb) / (2 * H * (1 - 2 * Hb));
    k.K_ = xi / (2 * H * (1 - 2 * H)) / std::pow(p.T, 2 * H);
    k.L_ = xi * (2 * H - 2 * Hb) / ((2 * H - 1) * (1 - 2 * Hb)) / p.T;
    k.xi_ = xi;
    return k;
}

CovKernel CovKernel::log(double xi, double ell, double T) {
    if (!(ell > 0) || !(ell < T)) throw std::domain_error("log kernel needs 0 < ell < T");
    CovKernel k;
    k.log_ = true;
    k.T_ = T;
    k.xi_ = xi;
    k.ell_ = ell;
    return k;
}

CovKernel CovKernel::for_pair(const PairParams& p, double ell) {
    if (p.H_ij == 0) return log(p.xi(), ell, p.T);
    return power(p);
}

double CovKernel::operator()(double x) const {
    x = std::abs(x);
    if (x >= T_) return 0.0;
    if (log_) {
        if (x < ell_) return -xi_ * (std::log(ell_ / T_) - 1 + x / ell_);
        return -xi_ * std::log(x / T_);
    }
    return c0_ - K_ * std::pow(x, 2 * H_) - L_ * x;
}

// Even function R with R'' = c (power kernel: c minus its constant c0).
double CovKernel::second_antideriv(double x) const {
    x = std::abs(x);
    if (log_) {
        const double a = xi_ * (1 - std::log(ell_ / T_));
        auto cap2 = [&](double y) { return a * y * y / 2 - xi_ * y * y * y / (6 * ell_); };
        auto cap1 = [&](double y) { return a * y - xi_ * y * y / (2 * ell_); };
        if (x <= ell_) return cap2(x);
        auto prim1 = [&](double y) { return y * std::log(y / T_) - y; };
        auto prim2 = [&](double y) { return y * y / 2 * std::log(y / T_) - 0.75 * y * y; };
        auto mid1 = [&](double y) { return cap1(ell_) - xi_ * (prim1(y) - prim1(ell_)); };
        auto mid2 = [&](double y) {
            return cap2(ell_) + cap1(ell_) * (y - ell_) - xi_ * (prim2(y) - prim2(ell_) - prim1(ell_) * (y - ell_));
        };
        if (x <= T_) return mid2(x);
        return mid2(T_) + mid1(T_) * (x - T_);
    }
    const double b = 2 * H_;
    auto r2 = [&](double y) { return -K_ * std::pow(y, b + 2) / ((b + 1) * (b + 2)) - L_ * y * y * y / 6; };
    if (x <= T_) return r2(x);
    double r1T = -K_ * std::pow(T_, b + 1) / (b + 1) - L_ * T_ * T_ / 2;
    double u = x - T_;
    return r2(T_) + r1T * u - c0_ * u * u / 2;
}

double CovKernel::rect(double a, double la, double b, double lb) const {
    double c = b + lb - a;
    double s = second_antideriv(c) - second_antideriv(c - la) - second_antideriv(b - a) + second_antideriv(b - a - la);
    if (!log_) s += c0_ * la * lb;
    return s;
}

double CovKernel::block(double tau, double Delta) const {
    tau = std::abs(tau);
    if (!log_ && tau >= Delta && tau + Delta <= T_) {
        // int_{-1}^{1} (1 - |s|) (1 + s z)^b ds, even-power series for small z
        const double b = 2 * H_, a = b + 2, z = Delta / tau;
        double S;
        if (z < 0.5) {
            double coef = 1, zz = 1;
            S = 0;
            for (int k = 1; k < 200; ++k) {
                double t = coef * zz;
                S += t;
                if (std::abs(t) < 1e-17 * std::abs(S)) break;
                coef *= (a - 2 * k) * (a - 2 * k - 1) / ((2 * k + 1) * (2 * k + 2));
                zz *= z * z;
            }
        } else {
            S = (std::pow(1 + z, a) + std::pow(1 - z, a) - 2) / (z * z * (b + 1) * a);
        }
        return Delta * Delta * (c0_ - L_ * tau - K_ * std::pow(tau, b) * S);
    }
    return rect(0, Delta, tau, Delta);
}

double CovKernel::riemann_block(double tau, double h, int n) const {
    double s = 0;
    for (int m = -(n - 1); m <= n - 1; ++m) s += (n - std::abs(m)) * (*this)(tau + m * h);
    return s / (double(n) * n);
}

double msfbm_cross_cov(double tau, const PairParams& p) {
    require_power(p);
    if (tau < 0 || !std::isfinite(tau)) throw std::domain_error("lag must be finite and non-negative");
    if (tau >= p.T) return 0.0;
    double H = p.H_ij, Hb = p.Hbar(), r = tau / p.T;
    double A = (1 + 2 * H - 2 * Hb) / (2 * H * (1 - 2 * Hb));
    return p.xi() * (A - std::pow(r, 2 * H) / (2 * H * (1 - 2 * H)) -
                     r * (2 * H - 2 * Hb) / ((2 * H - 1) * (1 - 2 * Hb)));
}

double log_kernel_cov(double tau, double ell, double xi, double T) {
    if (ell >= T) throw std::domain_error("log kernel needs ell < T");
    return CovKernel::log(xi, ell, T)(tau);
}

double noise_correlation(double h, const PairParams& p) {
    if (!(h > 0)) throw std::domain_error("scale h must be positive");
    if (h > p.T) return p.g;
    return p.g * std::pow(h / p.T, 2 * (p.H_ij - p.Hbar()));
}

double integrated_cov(const KernelArgs& a) {
    if (a.tau < 0 || !(a.Delta > 0)) throw std::domain_error("need tau >= 0 and Delta > 0");
    if (a.tau + a.Delta > a.pair.T) throw std::domain_error("tau + Delta exceeds T");
    return CovKernel::power(a.pair).block(a.tau, a.Delta) / a.pair.lambda_prod();
}

double interval_cov(double a, double la, double b, double lb, const PairParams& p) {
    if (!(la > 0) || !(lb > 0)) throw std::domain_error("interval lengths must be positive");
    return CovKernel::power(p).rect(a, la, b, lb) / p.lambda_prod();
}

double logvol_incr_cov(const KernelArgs& a) {
    if (!(a.tau > 0)) throw std::domain_error("increment lag must be positive");
    if (a.tau + a.Delta > a.pair.T) throw std::domain_error("tau + Delta exceeds T");
    CovKernel k = CovKernel::power(a.pair);
    double D2 = a.Delta * a.Delta;
    return 2 * (k.block(0, a.Delta) - k.block(a.tau, a.Delta)) / D2 / a.pair.lambda_prod();
}

double logvol_incr_corr(double tau, double Delta, const PairParams& p) {
    auto diag = [&](double H, double l2) {
        PairParams q = p;
        q.H_i = q.H_j = q.H_ij = H;
        q.lambda_i2 = q.lambda_j2 = l2;
        q.g = 1;
        return logvol_incr_cov({tau, Delta, q});
    };
    double vi = diag(p.H_i, p.lambda_i2), vj = diag(p.H_j, p.lambda_j2);
    if (!(vi > 0) || !(vj > 0)) throw std::domain_error("vanishing diagonal increment variance");
    return logvol_incr_cov({tau, Delta, p}) / std::sqrt(vi * vj);
}

namespace {

// second difference F(tau + D) + F(|tau - D|) - 2 F(tau)
template <class F>
double second_diff(F&& f, double tau, double D) {
    return f(tau + D) + f(std::abs(tau - D)) - 2 * f(tau);
}

}  // namespace

SeriesResult mrm_cross_cov_series(double tau, double Delta, const PairParams& p, int n_terms, double tol) {
    if (!(Delta > 0) || tau < 0) throw std::domain_error("need Delta > 0 and tau >= 0");
    if (tau + Delta > p.T) throw std::domain_error("tau + Delta exceeds T");
    if (n_terms < 1) throw std::domain_error("n_terms must be >= 1");
    CovKernel k = CovKernel::power(p);
    const double K = k.K(), L = k.L(), b = 2 * k.H();
    SeriesResult r;
    double sum = 0;
    // F_n(x) = (-K x^b)^n / n! * x^2 [I(nb + 1, Lx) - I(nb + 2, Lx)]
    auto Fn = [&](int n, double x) {
        if (x == 0) return 0.0;
        double y = -K * std::pow(x, b);
        double c = 1;
        for (int m = 1; m <= n; ++m) c *= y / m;
        double s = n * b;
        return c * x * x * (unit_gamma(s + 1, L * x) - unit_gamma(s + 2, L * x));
    };
    for (int n = 0; n < n_terms; ++n) {
        double term = second_diff([&](double x) { return Fn(n, x); }, tau, Delta);
        sum += term;
        r.terms = n + 1;
        r.last_term_rel = sum != 0 ? std::abs(term / sum) : std::abs(term);
        if (n > 0 && r.last_term_rel < tol) {
            r.converged = true;
            break;
        }
    }
    r.value = std::exp(k.c0()) * sum;
    return r;
}

double mrm_cross_cov_sia(double tau, double Delta, const PairParams& p) {
    if (!(Delta > 0) || tau < 0) throw std::domain_error("need Delta > 0 and tau >= 0");
    if (tau + Delta > p.T) throw std::domain_error("tau + Delta exceeds T");
    CovKernel k = CovKernel::power(p);
    const double K = k.K(), L = k.L(), b = 2 * k.H();
    // int_0^x (x - z) z^m e^{-K z^b} dz = x^{m+2}/b [I((m+1)/b, y) - I((m+2)/b, y)], y = K x^b
    auto F = [&](int m, double x) {
        if (x == 0) return 0.0;
        double y = K * std::pow(x, b);
        return std::pow(x, m + 2) / b * (unit_gamma((m + 1) / b, y) - unit_gamma((m + 2) / b, y));
    };
    double I = second_diff([&](double x) { return F(0, x); }, tau, Delta);
    double II = second_diff([&](double x) { return F(1, x); }, tau, Delta);
    return std::exp(k.c0()) * (I - L * II);
}

double zeta_exponent(double p, double q, double xi_ij) { return p + q - xi_ij * (p + q) * (p + q) / 2; }

}  // namespace msfbm
