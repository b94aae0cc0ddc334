#include "msfbm/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msfbm {

namespace {

constexpr double kEps = 1e-17;
constexpr int kMaxIter = 100000;

// e^{-x} sum_k x^k / (s (s+1) ... (s+k)), i.e. x^{-s} gamma(s, x)
double series_scaled(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k < kMaxIter; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x);
}

// Lentz continued fraction for Gamma(s, x) e^{x} x^{-s}
double upper_cf_scaled(double s, double x) {
    const double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1 - s;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        double an = -i * (i - s);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1) < kEps) break;
    }
    return h;
}

}  // namespace

double lower_incomplete_gamma(double s, double x) {
    if (!(s > 0)) throw std::domain_error("lower_incomplete_gamma: s must be positive");
    if (x < 0) throw std::domain_error("lower_incomplete_gamma: x must be non-negative");
    if (x == 0) return 0.0;
    if (std::isinf(x)) return std::tgamma(s);
    if (x < s + 1) return series_scaled(s, x) * std::pow(x, s);
    double upper = std::exp(s * std::log(x) - x) * upper_cf_scaled(s, x);
    return std::tgamma(s) - upper;
}

double gamma_p(double s, double x) {
    if (!(s > 0)) throw std::domain_error("gamma_p: s must be positive");
    if (x < 0) throw std::domain_error("gamma_p: x must be non-negative");
    if (x == 0) return 0.0;
    if (x < s + 1) return std::exp(s * std::log(x) - std::lgamma(s)) * series_scaled(s, x);
    return 1.0 - std::exp(s * std::log(x) - x - std::lgamma(s)) * upper_cf_scaled(s, x);
}

double unit_gamma(double s, double x) {
    if (!(s > 0)) throw std::domain_error("unit_gamma: s must be positive");
    if (x <= 0) {
        // all terms positive
        double y = -x;
        double term = 1.0;
        double sum = 1.0 / s;
        for (int k = 1; k < kMaxIter; ++k) {
            term *= y / k;
            double t = term / (s + k);
            sum += t;
            if (t < sum * kEps) break;
        }
        return sum;
    }
    if (x < s + 1) return series_scaled(s, x);
    return std::exp(std::log(gamma_p(s, x)) + std::lgamma(s) - s * std::log(x));
}

}  // namespace msfbm
