#include "msfbm/moments.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace msfbm {

LagGrid LagGrid::standard(int Q) {
    if (Q < 0 || Q > 60) throw std::domain_error("lag grid Q out of range");
    std::set<int> s;
    for (int k = 0; k <= Q; ++k) s.insert(static_cast<int>(std::floor(std::sqrt(std::ldexp(1.0, k)))));
    LagGrid g;
    g.Q = Q;
    g.taus.assign(s.begin(), s.end());
    return g;
}

LagGrid LagGrid::truncated(int N) const {
    LagGrid g = *this;
    g.taus.erase(std::remove_if(g.taus.begin(), g.taus.end(), [N](int t) { return t >= N; }), g.taus.end());
    return g;
}

namespace {

void check_inputs(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& lags,
                  const std::vector<unsigned char>* mask) {
    if (x.size() != y.size()) throw StructuralError("series lengths differ");
    if (x.size() < 2) throw StructuralError("series too short");
    if (mask && mask->size() != x.size()) throw StructuralError("mask length differs from series");
    for (size_t q = 0; q < lags.size(); ++q) {
        if (lags[q] < 0) throw std::domain_error("negative lag");
        if (lags[q] >= static_cast<int>(x.size())) throw std::domain_error("lag " + std::to_string(lags[q]) + " >= N");
        if (q > 0 && lags[q] <= lags[q - 1]) throw StructuralError("lags must be strictly increasing");
    }
}

struct Centered {
    std::vector<double> x, y;
    double n = 0;
};

Centered center(const std::vector<double>& x, const std::vector<double>& y, const std::vector<unsigned char>* mask) {
    const size_t N = x.size();
    Centered c;
    double sx = 0, sy = 0;
    for (size_t l = 0; l < N; ++l) {
        if (mask && (*mask)[l]) continue;
        sx += x[l];
        sy += y[l];
        c.n += 1;
    }
    if (c.n < 2) throw std::domain_error("fewer than two usable observations");
    double mx = sx / c.n, my = sy / c.n;
    c.x.resize(N);
    c.y.resize(N);
    for (size_t l = 0; l < N; ++l) {
        bool skip = mask && (*mask)[l];
        c.x[l] = skip ? 0.0 : x[l] - mx;
        c.y[l] = skip ? 0.0 : y[l] - my;
    }
    return c;
}

CovCurve make_curve(const std::vector<int>& lags, std::vector<double> v, size_t N) {
    CovCurve c;
    c.lags.assign(lags.begin(), lags.end());
    c.values = std::move(v);
    c.meta = "empirical cross-covariance, N=" + std::to_string(N);
    return c;
}

}  // namespace

CovCurve empirical_cross_cov(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& lags,
                             const std::vector<unsigned char>* mask) {
    check_inputs(x, y, lags, mask);
    Centered c = center(x, y, mask);
    const int N = static_cast<int>(x.size());
    const int Q = static_cast<int>(lags.size());
    std::vector<double> v(Q);
#pragma omp parallel for schedule(dynamic)
    for (int q = 0; q < Q; ++q) {
        const int k = lags[q];
        const double* px = c.x.data();
        const double* py = c.y.data() + k;
        double s = 0;
#pragma omp simd reduction(+ : s)
        for (int l = 0; l < N - k; ++l) s += px[l] * py[l];
        v[q] = s / c.n;
    }
    return make_curve(lags, std::move(v), x.size());
}

CovCurve empirical_cross_cov(const std::vector<double>& x, const std::vector<double>& y, const LagGrid& grid) {
    return empirical_cross_cov(x, y, grid.taus);
}

CovCurve empirical_cross_cov_serial(const std::vector<double>& x, const std::vector<double>& y,
                                    const std::vector<int>& lags, const std::vector<unsigned char>* mask) {
    check_inputs(x, y, lags, mask);
    const size_t N = x.size();
    double mx = 0, my = 0, n = 0;
    for (size_t l = 0; l < N; ++l) {
        if (mask && (*mask)[l]) continue;
        mx += x[l];
        my += y[l];
        n += 1;
    }
    if (n < 2) throw std::domain_error("fewer than two usable observations");
    mx /= n;
    my /= n;
    std::vector<double> v;
    for (int k : lags) {
        double s = 0;
        for (size_t l = 0; l + k < N; ++l) {
            if (mask && ((*mask)[l] || (*mask)[l + k])) continue;
            s += (x[l] - mx) * (y[l + k] - my);
        }
        v.push_back(s / n);
    }
    return make_curve(lags, std::move(v), N);
}

CovCurve d_statistic(const CovCurve& curve) {
    curve.check();
    if (curve.lags.front() != 0) throw StructuralError("d_statistic needs lag 0");
    CovCurve d = curve;
    for (auto& v : d.values) v -= curve.values.front();
    d.values.front() = 0.0;
    d.meta = "D statistic of " + curve.meta;
    return d;
}

Eigen::MatrixXd moment_contributions(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<int>& lags) {
    check_inputs(x, y, lags, nullptr);
    Centered c = center(x, y, nullptr);
    const int N = static_cast<int>(x.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, lags.size());
    for (size_t q = 0; q < lags.size(); ++q)
        for (int l = 0; l + lags[q] < N; ++l) m(l, q) = c.x[l] * c.y[l + lags[q]];
    return m;
}

int default_bandwidth(int N) {
    int b = static_cast<int>(std::floor(std::cbrt(static_cast<double>(N))));
    while ((b + 1) * (b + 1) * (b + 1) <= N) ++b;
    while (b > 0 && b * b * b > N) --b;
    return b;
}

HacResult newey_west_weight(const Eigen::MatrixXd& series, int bandwidth) {
    const long n = series.rows();
    const long Q = series.cols();
    if (bandwidth < 0) throw std::domain_error("bandwidth must be >= 0");
    if (n <= bandwidth) throw std::domain_error("series length must exceed bandwidth");
    Eigen::MatrixXd v = series.rowwise() - series.colwise().mean();
    HacResult r;
    r.S = (v.transpose() * v) / double(n);
    for (int j = 1; j <= bandwidth; ++j) {
        double w = 1.0 - j / (bandwidth + 1.0);
        Eigen::MatrixXd G = (v.bottomRows(n - j).transpose() * v.topRows(n - j)) / double(n);
        r.S += w * (G + G.transpose());
    }
    double tr = r.S.trace();
    if (!(tr > 0) || !std::isfinite(tr)) {
        r.fallback = true;
        r.W = Eigen::MatrixXd::Identity(Q, Q);
        return r;
    }
    double eps = 1e-10 * tr / Q;
    Eigen::MatrixXd A = r.S + eps * Eigen::MatrixXd::Identity(Q, Q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    Eigen::VectorXd e = es.eigenvalues().cwiseMax(eps);
    r.W = es.eigenvectors() * e.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    r.W = 0.5 * (r.W + r.W.transpose());
    return r;
}

MomentModel::MomentModel(int N, double Delta, double T, std::vector<int> lags, MomentModelOptions opt)
    : N_(N), Delta_(Delta), T_(T), lags_(std::move(lags)), opt_(opt) {
    if (N < 2 || !(Delta > 0) || !(T > 0)) throw StructuralError("moment model needs N >= 2, Delta > 0, T > 0");
    for (int k : lags_)
        if (k < 0 || k >= N) throw std::domain_error("model lag outside [0, N)");
    if (opt_.sampling == Sampling::Riemann && opt_.agg < 1) throw StructuralError("Riemann sampling needs agg >= 1");
}

double MomentModel::block_power(double beta, int k) const {
    auto f = [&](double x) {
        x = std::abs(x);
        return x > T_ ? 0.0 : (x == 0 ? (beta == 0 ? 1.0 : 0.0) : std::pow(x, beta));
    };
    const double tau = k * Delta_;
    if (opt_.sampling == Sampling::Riemann && k < opt_.riemann_lags) {
        const int n = opt_.agg;
        const double h = Delta_ / n;
        double s = 0;
        for (int m = -(n - 1); m <= n - 1; ++m) s += (n - std::abs(m)) * f(tau + m * h);
        return s / (double(n) * n);
    }
    auto R2 = [&](double x) {
        x = std::abs(x);
        double b1 = beta + 1, b2 = beta + 2;
        if (x <= T_) return std::pow(x, b2) / (b1 * b2);
        return std::pow(T_, b2) / (b1 * b2) + std::pow(T_, b1) / b1 * (x - T_);
    };
    if (tau - Delta_ >= T_) return 0.0;
    return (R2(tau + Delta_) + R2(tau - Delta_) - 2 * R2(tau)) / (Delta_ * Delta_);
}

const std::vector<double>& MomentModel::basis(double beta) {
    auto it = cache_.find(beta);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 512) cache_.clear();
    std::vector<double> out(lags_.size());
    if (!opt_.mean_corrected) {
        for (size_t q = 0; q < lags_.size(); ++q) out[q] = block_power(beta, lags_[q]);
        return cache_[beta] = out;
    }
    const int N = N_;
    std::vector<double> c(N);
    // past the support every block covariance vanishes
    int kmax = std::min<long>(N - 1, static_cast<long>(std::ceil(T_ / Delta_)) + 1);
    for (int k = 0; k <= kmax; ++k) c[k] = block_power(beta, k);
    std::vector<double> P(N + 1, 0.0);
    for (int k = 0; k < N; ++k) P[k + 1] = P[k] + c[k];
    std::vector<double> a(N), PA(N + 1, 0.0);
    for (int l = 0; l < N; ++l) {
        a[l] = (P[l + 1] + P[N - l] - c[0]) / N;
        PA[l + 1] = PA[l] + a[l];
    }
    const double S = PA[N] / N;
    for (size_t q = 0; q < lags_.size(); ++q) {
        const int k = lags_[q];
        double v = (N - k) * c[k] - PA[N - k] - (PA[N] - PA[k]) + (N - k) * S;
        out[q] = v / N;
    }
    return cache_[beta] = out;
}

std::vector<double> MomentModel::curve(const CovKernel& k) {
    if (k.is_log()) throw std::domain_error("moment model supports the power kernel only");
    if (k.T() != T_) throw StructuralError("kernel T differs from model T");
    const std::vector<double> b0 = basis(0.0);
    const std::vector<double> b1 = basis(1.0);
    const std::vector<double> bh = basis(2 * k.H());
    std::vector<double> out(lags_.size());
    for (size_t q = 0; q < out.size(); ++q) out[q] = k.c0() * b0[q] - k.K() * bh[q] - k.L() * b1[q];
    return out;
}

}  // namespace msfbm
