#pragma once

#include "msfbm/curve.hpp"
#include "msfbm/kernels.hpp"

#include <map>
#include <vector>

namespace msfbm {

struct LagGrid {
    int Q = 19;
    std::vector<int> taus;

    // floor(sqrt(2^k)) for k = 0..Q, duplicates removed
    static LagGrid standard(int Q = 19);
    // drop lags >= N
    LagGrid truncated(int N) const;
};

// Chat(k) = (1/N) sum_{l < N-k} (x_l - m_x)(y_{l+k} - m_y). Lags are in units of
// the sampling step. When mask is given (1 = excluded), excluded points are left
// out of the means and of the products, and N counts the kept points.
CovCurve empirical_cross_cov(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& lags,
                             const std::vector<unsigned char>* mask = nullptr);
CovCurve empirical_cross_cov(const std::vector<double>& x, const std::vector<double>& y, const LagGrid& grid);
// reference implementation, single-threaded
CovCurve empirical_cross_cov_serial(const std::vector<double>& x, const std::vector<double>& y,
                                    const std::vector<int>& lags, const std::vector<unsigned char>* mask = nullptr);

// Dhat(k) = Chat(k) - Chat(0)
CovCurve d_statistic(const CovCurve& curve);

// n x Q matrix whose column q holds (x_l - m_x)(y_{l+k_q} - m_y), zero past the end
Eigen::MatrixXd moment_contributions(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<int>& lags);

struct HacResult {
    Eigen::MatrixXd S;
    Eigen::MatrixXd W;
    bool fallback = false;  // S degenerate, W = identity
};

int default_bandwidth(int N);
// Bartlett-weighted long-run covariance of the rows of series (n x Q)
HacResult newey_west_weight(const Eigen::MatrixXd& series, int bandwidth);

enum class Sampling { Continuous, Riemann };

struct MomentModelOptions {
    bool mean_corrected = true;  // model E[Chat] including the sample-mean bias
    Sampling sampling = Sampling::Continuous;
    int agg = 1;             // points per block for Riemann sampling
    int riemann_lags = 32;   // lags below this use the exact Riemann form
};

// Theoretical counterpart of Chat for a series of N block values at step Delta.
// The power kernel c0 - K x^{2H} - L x on [0, T] is linear in (c0, K, L), so the
// model is assembled from per-exponent basis curves.
class MomentModel {
public:
    MomentModel(int N, double Delta, double T, std::vector<int> lags, MomentModelOptions opt = {});

    // model curve for block covariances of the given kernel, at the lags
    std::vector<double> curve(const CovKernel& k);
    std::vector<double> curve(const PairParams& p) { return curve(CovKernel::power(p)); }
    const std::vector<int>& lags() const { return lags_; }
    int N() const { return N_; }

private:
    const std::vector<double>& basis(double beta);
    double block_power(double beta, int k) const;
    int N_;
    double Delta_, T_;
    std::vector<int> lags_;
    MomentModelOptions opt_;
    std::map<double, std::vector<double>> cache_;
};

}  // namespace msfbm
