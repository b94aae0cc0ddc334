#include "msfbm/mc.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace msfbm {

nlohmann::json McConfig::to_json() const {
    return {{"truth", msfbm::to_json(truth)},
            {"N_list", N_list},
            {"agg", agg},
            {"Delta", Delta},
            {"replicas", replicas},
            {"seed", seed},
            {"proxy", proxy == ProxyMode::Gaussian ? "gaussian" : "measure"},
            {"Q", Q},
            {"residual", gmm.residual == Residual::C ? "C" : "D"},
            {"two_step", gmm.two_step},
            {"mean_corrected", gmm.model.mean_corrected},
            {"sampling", gmm.model.sampling == Sampling::Riemann ? "riemann" : "continuous"}};
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (size_t k = 0; k < n; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

namespace {

std::string pname(const char* base, int i) { return std::string(base) + "_" + std::to_string(i); }
std::string pname(const char* base, int i, int j) { return std::string(base) + "_" + std::to_string(i) + std::to_string(j); }

struct Outcome {
    bool ok = false;
    bool converged = true;
    std::string error;
    std::map<std::string, double> est;
};

Outcome calibrate_one(const FieldPanel& fine, const McConfig& cfg, const LagGrid& grid, const GmmOptions& gmm) {
    Outcome o;
    try {
        FieldPanel obs = cfg.proxy == ProxyMode::Gaussian ? field_to_gaussian_proxy(fine, cfg.truth, cfg.agg)
                                                          : field_to_measure(fine, cfg.truth, cfg.agg);
        PanelCalibration pc = calibrate_panel(obs, grid, cfg.truth.T, gmm, nullptr, 1);
        const int d = cfg.truth.d;
        for (int i = 0; i < d; ++i) {
            const auto& m = pc.marginals[i];
            if (!m.error.empty()) throw std::runtime_error(m.error);
            o.converged = o.converged && m.converged;
            o.est[pname("H", i)] = m.params.at("H");
            o.est[pname("lambda2", i)] = m.params.at("lambda2");
        }
        for (const auto& [ij, r] : pc.pairs) {
            if (!r.error.empty()) throw std::runtime_error(r.error);
            o.converged = o.converged && r.converged;
            o.est[pname("H", ij.first, ij.second)] = r.params.at("H_ij");
            o.est[pname("g", ij.first, ij.second)] = r.params.at("g");
        }
        o.ok = true;
    } catch (const std::exception& e) {
        o.error = e.what();
    }
    return o;
}

}  // namespace

McReport mc_validate(const McConfig& cfg) {
    auto report = validate(cfg.truth, true);
    if (!report.empty()) throw std::invalid_argument("inadmissible true parameters:\n" + format_report(report));
    if (cfg.replicas < 1) throw StructuralError("replicas must be >= 1");
    if (cfg.N_list.empty()) throw StructuralError("empty N list");
    if (cfg.agg < 1) throw StructuralError("agg must be >= 1");
    for (int N : cfg.N_list)
        if (N < 1 || N % cfg.agg != 0) throw StructuralError("agg must divide every N");
    McReport rep;
    rep.config = cfg.to_json();
    rep.std_defined = cfg.replicas > 1;
    LagGrid grid = LagGrid::standard(cfg.Q);
    GmmOptions gmm = cfg.gmm;
    gmm.model.agg = cfg.agg;
    const int nt = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();

    for (size_t c = 0; c < cfg.N_list.size(); ++c) {
        const int Nf = cfg.N_list[c];
        FieldSampler sampler(cfg.truth, Nf, cfg.Delta);
        std::vector<Outcome> out(cfg.replicas);
        const int pairs = (cfg.replicas + 1) / 2;
        // every N gets its own stream family so cells are independent
        const std::uint64_t seed = cfg.seed + 0x9E3779B97F4A7C15ULL * (c + 1);
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
        for (int s = 0; s < pairs; ++s) {
            Eigen::MatrixXd re, im;
            sampler.draw_pair(seed, static_cast<std::uint64_t>(s), re, im);
            for (int part = 0; part < 2; ++part) {
                int r = 2 * s + part;
                if (r >= cfg.replicas) break;
                FieldPanel fp;
                fp.d = cfg.truth.d;
                fp.N = Nf;
                fp.Delta = cfg.Delta;
                fp.seed = seed;
                fp.data = part == 0 ? re : im;
                out[r] = calibrate_one(fp, cfg, grid, gmm);
            }
        }
        McCell cell;
        cell.N = Nf;
        cell.n_obs = Nf / cfg.agg;
        cell.seed = seed;
        for (int r = 0; r < cfg.replicas; ++r) {
            if (!out[r].ok) {
                ++cell.failures;
                cell.failure_messages.push_back("replica " + std::to_string(r) + ": " + out[r].error);
                continue;
            }
            if (!out[r].converged) ++cell.unconverged;
            cell.replica.push_back(r);
            for (const auto& [k, v] : out[r].est) cell.estimates[k].push_back(v);
        }
        if (cell.failures > 0.2 * cfg.replicas)
            throw McHarnessError("more than 20% of replicas failed at N=" + std::to_string(Nf) + ": " +
                                 (cell.failure_messages.empty() ? "" : cell.failure_messages.front()));
        for (const auto& [k, v] : cell.estimates) {
            double m = 0;
            for (double x : v) m += x;
            m /= v.size();
            double s = 0;
            for (double x : v) s += (x - m) * (x - m);
            cell.mean[k] = m;
            cell.std[k] = v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : std::numeric_limits<double>::quiet_NaN();
        }
        rep.cells.push_back(std::move(cell));
    }
    if (rep.cells.size() >= 3 && rep.std_defined) {
        for (const auto& [k, s0] : rep.cells.front().std) {
            (void)s0;
            std::vector<double> x, y;
            for (const auto& cell : rep.cells) {
                x.push_back(std::log(double(cell.N)));
                y.push_back(std::log(cell.std.at(k)));
            }
            rep.slope[k] = ols_slope(x, y);
        }
    }
    return rep;
}

nlohmann::json McReport::to_json() const {
    nlohmann::json j;
    j["config"] = config;
    j["std_defined"] = std_defined;
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cj;
        cj["N"] = c.N;
        cj["n_obs"] = c.n_obs;
        cj["seed"] = c.seed;
        cj["replicas"] = c.replica.size() + c.failures;
        cj["kept"] = c.replica.size();
        cj["failures"] = c.failures;
        cj["unconverged"] = c.unconverged;
        cj["failure_messages"] = c.failure_messages;
        cj["mean"] = c.mean;
        nlohmann::json sj;
        for (const auto& [k, v] : c.std) sj[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
        cj["std"] = sj;
        cs.push_back(cj);
    }
    j["cells"] = cs;
    if (!slope.empty()) j["slope_log_std_vs_log_N"] = slope;
    return j;
}

std::string McReport::to_csv() const {
    std::ostringstream os;
    os << "replica,N,parameter,value\n";
    char buf[40];
    for (const auto& c : cells)
        for (const auto& [k, v] : c.estimates)
            for (size_t r = 0; r < v.size(); ++r) {
                std::snprintf(buf, sizeof buf, "%.17g", v[r]);
                os << c.replica[r] << "," << c.N << "," << k << "," << buf << "\n";
            }
    return os.str();
}

}  // namespace msfbm
