#include "msfbm/calibrate.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msfbm {

nlohmann::json GmmResult::to_json() const {
    nlohmann::json j;
    j["params"] = params;
    j["objective"] = objective;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["weight_fallback"] = weight_fallback;
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < W.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < W.cols(); ++k) row.push_back(W(i, k));
        w.push_back(row);
    }
    j["weight"] = w;
    if (!residual.lags.empty()) j["residual"] = residual.to_json();
    if (!error.empty()) j["error"] = error;
    return j;
}

namespace {

struct Moments {
    std::vector<int> grid;        // lags of the residual vector
    std::vector<int> model_lags;  // lags handed to the model (lag 0 first for D)
    Eigen::VectorXd emp;
    Eigen::MatrixXd contrib;
    int N = 0;
};

Moments build_moments(const std::vector<double>& x, const std::vector<double>& y, const LagGrid& grid,
                      Residual res, const std::vector<unsigned char>* mask) {
    Moments m;
    m.N = static_cast<int>(x.size());
    if (mask) {
        int kept = 0;
        for (auto b : *mask) kept += b ? 0 : 1;
        m.N = kept;
    }
    m.grid = grid.truncated(static_cast<int>(x.size())).taus;
    if (m.grid.empty()) throw std::domain_error("series shorter than the smallest lag");
    m.model_lags = m.grid;
    if (res == Residual::D && m.grid.front() != 0) m.model_lags.insert(m.model_lags.begin(), 0);
    CovCurve c = empirical_cross_cov(x, y, m.model_lags, mask);
    const int Q = static_cast<int>(m.grid.size());
    const int off = static_cast<int>(m.model_lags.size()) - Q;
    m.emp.resize(Q);
    for (int q = 0; q < Q; ++q) m.emp(q) = c.values[q + off] - (off ? c.values[0] : 0.0);

    // per-observation contributions for the long-run covariance
    const int n = static_cast<int>(x.size());
    double mx = 0, my = 0, cnt = 0;
    for (int l = 0; l < n; ++l) {
        if (mask && (*mask)[l]) continue;
        mx += x[l];
        my += y[l];
        cnt += 1;
    }
    mx /= cnt;
    my /= cnt;
    auto cx = [&](int l) { return mask && (*mask)[l] ? 0.0 : x[l] - mx; };
    auto cy = [&](int l) { return mask && (*mask)[l] ? 0.0 : y[l] - my; };
    m.contrib = Eigen::MatrixXd::Zero(n, Q);
    for (int q = 0; q < Q; ++q) {
        const int k = m.grid[q];
        for (int l = 0; l + k < n; ++l) m.contrib(l, q) = cx(l) * cy(l + k);
        if (off)
            for (int l = 0; l < n; ++l) m.contrib(l, q) -= cx(l) * cy(l);
    }
    return m;
}

Eigen::VectorXd to_residual_model(const std::vector<double>& mv, int off) {
    const int Q = static_cast<int>(mv.size()) - off;
    Eigen::VectorXd r(Q);
    for (int q = 0; q < Q; ++q) r(q) = mv[q + off] - (off ? mv[0] : 0.0);
    return r;
}

double variance(const std::vector<double>& x, const std::vector<unsigned char>* mask) {
    double s = 0, s2 = 0, n = 0;
    for (size_t l = 0; l < x.size(); ++l) {
        if (mask && (*mask)[l]) continue;
        s += x[l];
        n += 1;
    }
    double m = s / n;
    for (size_t l = 0; l < x.size(); ++l) {
        if (mask && (*mask)[l]) continue;
        s2 += (x[l] - m) * (x[l] - m);
    }
    return s2 / n;
}

// Two-step GMM driver: model(theta) returns the residual-model vector.
template <class Model>
GmmResult run_gmm(const Moments& m, Model&& model, const Eigen::VectorXd& x0, const GmmOptions& opt,
                  Eigen::VectorXd& theta) {
    const int Q = static_cast<int>(m.grid.size());
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(Q, Q);
    auto objective = [&](const Eigen::VectorXd& th) {
        Eigen::VectorXd r = m.emp - model(th);
        return r.dot(W * r);
    };
    NmResult nm = nelder_mead(objective, x0, opt.nm);
    GmmResult res;
    res.iterations = nm.iterations;
    bool converged = nm.converged;
    if (opt.two_step) {
        if (opt.weight) {
            if (opt.weight->rows() != Q || opt.weight->cols() != Q) throw StructuralError("weight matrix size mismatch");
            W = *opt.weight;
        } else {
            int bw = opt.bandwidth >= 0 ? opt.bandwidth : default_bandwidth(m.N);
            HacResult hac = newey_west_weight(m.contrib, std::min(bw, static_cast<int>(m.contrib.rows()) - 1));
            res.weight_fallback = hac.fallback;
            W = hac.W;
        }
        // rescale so the objective stays O(1) in magnitude
        W = W / W.trace() * Q;
        nm = nelder_mead(objective, nm.x, opt.nm);
        res.iterations += nm.iterations;
        converged = nm.converged;
    }
    theta = nm.x;
    res.converged = converged;
    res.objective = nm.f;
    res.W = W;
    Eigen::VectorXd r = m.emp - model(theta);
    res.residual.lags.assign(m.grid.begin(), m.grid.end());
    res.residual.values.assign(r.data(), r.data() + r.size());
    res.residual.meta = "GMM residual";
    return res;
}

}  // namespace

GmmResult calibrate_univariate(const std::vector<double>& logvol, double Delta, const LagGrid& grid,
                               std::optional<double> fix_T, const GmmOptions& opt,
                               const std::vector<unsigned char>* mask) {
    if (!(Delta > 0)) throw std::domain_error("Delta must be positive");
    for (double v : logvol)
        if (!std::isfinite(v)) throw std::domain_error("non-finite value in series");
    if (!(variance(logvol, mask) > 0)) throw std::domain_error("zero-variance series");
    Moments m = build_moments(logvol, logvol, grid, opt.residual, mask);
    const int off = static_cast<int>(m.model_lags.size() - m.grid.size());
    const double T0 = m.N * Delta;
    const double Tmax = opt.T_max_factor * T0;
    if (fix_T && !(*fix_T > 0)) throw std::domain_error("T must be positive");

    MomentModel fixed_model(m.N, Delta, fix_T ? *fix_T : T0, m.model_lags, opt.model);
    auto decode = [&](const Eigen::VectorXd& th, double& H, double& l2, double& T) {
        H = 0.5 * logistic(th(0));
        l2 = std::exp(th(1));
        T = fix_T ? *fix_T : T0 + (Tmax - T0) * logistic(th(2));
    };
    auto model = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        double H, l2, T;
        decode(th, H, l2, T);
        if (!(H > 1e-6 && H < 0.5 - 1e-9)) return Eigen::VectorXd::Constant(m.grid.size(), 1e100);
        PairParams p{1.0, H, l2, l2, H, H, T};
        if (fix_T) return to_residual_model(fixed_model.curve(p), off);
        MomentModel mm(m.N, Delta, T, m.model_lags, opt.model);
        return to_residual_model(mm.curve(p), off);
    };
    Eigen::VectorXd x0(fix_T ? 2 : 3);
    x0(0) = logit(0.1 / 0.5);
    x0(1) = std::log(0.05);
    if (!fix_T) x0(2) = logit(0.1);
    Eigen::VectorXd th;
    GmmResult r = run_gmm(m, model, x0, opt, th);
    double H, l2, T;
    decode(th, H, l2, T);
    r.params = {{"H", H}, {"lambda2", l2}, {"T", T}};
    if (!(H > 0 && H < 0.5 && l2 > 0)) throw std::logic_error("univariate estimate outside its box");
    return r;
}

GmmResult calibrate_pair(const std::vector<double>& x, const std::vector<double>& y, double lambda_i2,
                         double lambda_j2, double H_i, double H_j, double Delta, const LagGrid& grid, double T,
                         const GmmOptions& opt, const std::vector<unsigned char>* mask) {
    PairParams base{0.5, 0.5 * (H_i + H_j), lambda_i2, lambda_j2, H_i, H_j, T};
    if (!(lambda_i2 > 0 && lambda_j2 > 0)) throw std::domain_error("marginal intermittencies must be positive");
    if (H_i < 0 || H_i >= 0.5 || H_j < 0 || H_j >= 0.5) throw std::domain_error("marginal Hurst outside [0, 1/2)");
    if (!(Delta > 0) || !(T > 0)) throw std::domain_error("Delta and T must be positive");
    Moments m = build_moments(x, y, grid, opt.residual, mask);
    const int off = static_cast<int>(m.model_lags.size() - m.grid.size());
    MomentModel mm(m.N, Delta, T, m.model_lags, opt.model);
    const double Hb = base.Hbar();
    auto decode = [&](const Eigen::VectorXd& th, double& g, double& Hij) {
        g = std::tanh(th(0));
        Hij = Hb + (0.5 - Hb) * logistic(th(1));
    };
    auto model = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        double g, Hij;
        decode(th, g, Hij);
        if (!(Hij > 1e-6 && Hij < 0.5 - 1e-9)) return Eigen::VectorXd::Constant(m.grid.size(), 1e100);
        PairParams p = base;
        p.g = g;
        p.H_ij = Hij;
        return to_residual_model(mm.curve(p), off);
    };
    Eigen::VectorXd x0(2);
    x0(0) = std::atanh(0.5);
    double H0 = Hb < 0.1 ? 0.1 : 0.5 * (Hb + 0.5);
    x0(1) = logit((H0 - Hb) / (0.5 - Hb));
    Eigen::VectorXd th;
    GmmResult r = run_gmm(m, model, x0, opt, th);
    double g, Hij;
    decode(th, g, Hij);
    r.params = {{"g", g}, {"H_ij", Hij}, {"xi", g * std::sqrt(lambda_i2 * lambda_j2)}};
    if (!(std::abs(g) <= 1 && Hij >= Hb && Hij < 0.5)) throw std::logic_error("pair estimate outside its box");
    return r;
}

PanelCalibration calibrate_panel(const FieldPanel& panel, const LagGrid& grid, double T, const GmmOptions& opt,
                                 const std::vector<std::vector<unsigned char>>* masks, int workers) {
    panel.check();
    if (masks && static_cast<int>(masks->size()) != panel.d) throw StructuralError("one mask per row required");
    const int d = panel.d;
    const int nt = workers > 0 ? workers : omp_get_max_threads();
    std::vector<std::vector<double>> rows(d, std::vector<double>(panel.N));
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < panel.N; ++k) rows[i][k] = panel.data(i, k);

    PanelCalibration out;
    out.marginals.resize(d);
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
    for (int i = 0; i < d; ++i) {
        try {
            out.marginals[i] = calibrate_univariate(rows[i], panel.Delta, grid, T, opt, masks ? &(*masks)[i] : nullptr);
        } catch (const std::exception& e) {
            out.marginals[i].error = e.what();
        }
    }
    std::vector<std::pair<int, int>> todo;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) todo.emplace_back(i, j);
    std::vector<GmmResult> pr(todo.size());
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
    for (int t = 0; t < static_cast<int>(todo.size()); ++t) {
        auto [i, j] = todo[t];
        const GmmResult &a = out.marginals[i], &b = out.marginals[j];
        if (!a.error.empty() || !b.error.empty()) {
            pr[t].error = "marginal calibration failed for " + std::to_string(a.error.empty() ? j : i);
            continue;
        }
        std::vector<unsigned char> mk;
        if (masks) {
            mk.resize(panel.N);
            for (int k = 0; k < panel.N; ++k) mk[k] = (*masks)[i][k] | (*masks)[j][k];
        }
        try {
            pr[t] = calibrate_pair(rows[i], rows[j], a.params.at("lambda2"), b.params.at("lambda2"), a.params.at("H"),
                                   b.params.at("H"), panel.Delta, grid, T, opt, masks ? &mk : nullptr);
        } catch (const std::exception& e) {
            pr[t].error = e.what();
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ModelParams& est = out.estimate;
    est.d = d;
    est.T = T;
    est.H_mat = Eigen::MatrixXd::Constant(d, d, nan);
    est.xi_mat = Eigen::MatrixXd::Constant(d, d, nan);
    for (int i = 0; i < d; ++i) {
        if (!out.marginals[i].error.empty()) continue;
        est.H_mat(i, i) = out.marginals[i].params.at("H");
        est.xi_mat(i, i) = out.marginals[i].params.at("lambda2");
    }
    for (size_t t = 0; t < todo.size(); ++t) {
        auto [i, j] = todo[t];
        ++out.total_pairs;
        if (!pr[t].error.empty() || !pr[t].converged) ++out.failed_pairs;
        if (pr[t].error.empty()) {
            est.H_mat(i, j) = est.H_mat(j, i) = pr[t].params.at("H_ij");
            est.xi_mat(i, j) = est.xi_mat(j, i) = pr[t].params.at("xi");
        }
        out.pairs[{i, j}] = std::move(pr[t]);
    }
    for (int i = 0; i < d; ++i) {
        est.H_diag.push_back(est.H_mat(i, i));
        est.lambda2_diag.push_back(est.xi_mat(i, i));
    }
    if (est.xi_mat.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(est.xi_mat, Eigen::EigenvaluesOnly);
        out.xi_eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + d);
    }
    return out;
}

}  // namespace msfbm
