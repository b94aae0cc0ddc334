#include "msfbm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace msfbm {

double logistic(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

double logit(double p) { return std::log(p / (1 - p)); }

namespace {

NmResult run(const Objective& fun, const Eigen::VectorXd& x0, const NmOptions& opt, int iter_budget) {
    const int n = static_cast<int>(x0.size());
    auto f = [&](const Eigen::VectorXd& x) {
        double v = fun(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<Eigen::VectorXd> s(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (int i = 0; i < n; ++i) s[i + 1](i) += opt.initial_step;
    NmResult r;
    for (int i = 0; i <= n; ++i) fv[i] = f(s[i]);
    r.evaluations = n + 1;
    std::vector<int> idx(n + 1);
    for (r.iterations = 0; r.iterations < iter_budget; ++r.iterations) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        double diam = 0;
        for (int i = 1; i <= n; ++i) diam = std::max(diam, (s[idx[i]] - s[idx[0]]).lpNorm<Eigen::Infinity>());
        if (diam < opt.size_tol) {
            r.converged = true;
            break;
        }
        const int hi = idx[n], nh = idx[n - 1], lo = idx[0];
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) c += s[idx[i]];
        c /= n;
        Eigen::VectorXd xr = c + (c - s[hi]);
        double fr = f(xr);
        ++r.evaluations;
        if (fr < fv[lo]) {
            Eigen::VectorXd xe = c + 2 * (c - s[hi]);
            double fe = f(xe);
            ++r.evaluations;
            if (fe < fr) {
                s[hi] = xe;
                fv[hi] = fe;
            } else {
                s[hi] = xr;
                fv[hi] = fr;
            }
        } else if (fr < fv[nh]) {
            s[hi] = xr;
            fv[hi] = fr;
        } else {
            bool outside = fr < fv[hi];
            Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (s[hi] - c));
            double fc = f(xc);
            ++r.evaluations;
            if (fc < (outside ? fr : fv[hi])) {
                s[hi] = xc;
                fv[hi] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    s[idx[i]] = s[lo] + 0.5 * (s[idx[i]] - s[lo]);
                    fv[idx[i]] = f(s[idx[i]]);
                }
                r.evaluations += n;
            }
        }
    }
    int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    r.x = s[best];
    r.f = fv[best];
    return r;
}

}  // namespace

NmResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NmOptions& opt) {
    NmResult best = run(f, x0, opt, opt.max_iter);
    int used = best.iterations;
    for (int k = 0; k < opt.restarts && used < opt.max_iter; ++k) {
        NmOptions o = opt;
        o.initial_step = std::max(opt.initial_step * 0.1, 1e-3);
        NmResult r = run(f, best.x, o, opt.max_iter - used);
        used += r.iterations;
        int evals = best.evaluations + r.evaluations;
        if (r.f <= best.f) {
            best = r;
        } else {
            best.converged = best.converged && r.converged;
        }
        best.evaluations = evals;
    }
    best.iterations = used;
    return best;
}

}  // namespace msfbm
