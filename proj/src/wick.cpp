#include "msfbm/wick.hpp"

#include "msfbm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace msfbm {

double wick_moment(const Eigen::MatrixXd& cov) {
    const int n = static_cast<int>(cov.rows());
    if (cov.cols() != n) throw StructuralError("covariance must be square");
    if (n > kWickMaxOrder) throw std::domain_error("wick_moment: order above 16");
    if (n % 2 == 1) return 0.0;
    if (n == 0) return 1.0;
    // haf(S) = sum_{j in S, j != min S} cov(min S, j) haf(S \ {min S, j}), memoized over subsets
    std::vector<double> memo(std::size_t(1) << n, std::numeric_limits<double>::quiet_NaN());
    memo[0] = 1.0;
    auto haf = [&](auto&& self, unsigned S) -> double {
        if (!std::isnan(memo[S])) return memo[S];
        int i = __builtin_ctz(S);
        unsigned rest = S & ~(1u << i);
        double s = 0;
        for (unsigned R = rest; R; R &= R - 1) {
            int j = __builtin_ctz(R);
            s += cov(i, j) * self(self, rest & ~(1u << j));
        }
        return memo[S] = s;
    };
    return haf(haf, (1u << n) - 1);
}

Eigen::MatrixXd interval_cov_matrix(const std::vector<Interval>& iv, const ModelParams& params) {
    params.check_structure();
    const int n = static_cast<int>(iv.size());
    double lo = 0, hi = 0;
    for (int k = 0; k < n; ++k) {
        if (iv[k].marginal < 0 || iv[k].marginal >= params.d) throw StructuralError("interval marginal out of range");
        if (!(iv[k].length > 0)) throw std::domain_error("interval length must be positive");
        lo = k == 0 ? iv[k].start : std::min(lo, iv[k].start);
        hi = k == 0 ? iv[k].start + iv[k].length : std::max(hi, iv[k].start + iv[k].length);
    }
    if (hi - lo > params.T) throw std::domain_error("intervals do not fit in a window of length T");
    Eigen::MatrixXd C(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            CovKernel k = CovKernel::power(params.pair(iv[a].marginal, iv[b].marginal));
            double v = k.rect(iv[a].start, iv[a].length, iv[b].start, iv[b].length) / (iv[a].length * iv[b].length);
            C(a, b) = C(b, a) = v;
        }
    }
    return C;
}

double sia_generalized_moment(const std::vector<Interval>& intervals, const ModelParams& params) {
    if (intervals.size() % 2 == 1) return 0.0;
    return wick_moment(interval_cov_matrix(intervals, params));
}

}  // namespace msfbm
