#include "msfbm/simulate.hpp"

#include "msfbm/kernels.hpp"
#include "msfbm/rng.hpp"

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

namespace msfbm {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::GaussianField: return "gaussian-field";
        case Provenance::LogvolMeasure: return "logvol-measure";
        case Provenance::GaussianProxy: return "gaussian-average-proxy";
        case Provenance::Market: return "market";
    }
    return "unknown";
}

Provenance provenance_from_name(const std::string& s) {
    for (auto p : {Provenance::GaussianField, Provenance::LogvolMeasure, Provenance::GaussianProxy, Provenance::Market})
        if (provenance_name(p) == s) return p;
    throw StructuralError("unknown provenance '" + s + "'");
}

void FieldPanel::check() const {
    if (d < 1 || N < 2) throw StructuralError("panel needs d >= 1 and N >= 2");
    if (data.rows() != d || data.cols() != N) throw StructuralError("panel data shape mismatch");
    if (!(Delta > 0)) throw StructuralError("panel Delta must be positive");
}

std::string EmbeddingDiagnostics::flag() const {
    if (clipped_mass == 0) return "exact";
    return exact ? "exact-within-tolerance" : "approximate";
}

FieldSampler::FieldSampler(const ModelParams& params, int N, double Delta) : d_(params.d), N_(N), Delta_(Delta) {
    if (N < 2) throw StructuralError("N must be >= 2");
    if (!(Delta > 0)) throw StructuralError("Delta must be positive");
    auto report = validate(params, true);
    if (!report.empty()) throw std::invalid_argument("inadmissible parameters:\n" + format_report(report));
    M_ = 1;
    while (M_ < 2L * N) M_ *= 2;
    const long M = M_, F = M / 2 + 1;
    const int d = d_;

    // spectra of the symmetric circulant rows, one per pair
    std::vector<double> spec(static_cast<size_t>(F) * d * d);
    {
        std::vector<double> row(M);
        std::vector<std::complex<double>> out(F);
        fftw_plan p;
        {
            std::lock_guard<std::mutex> lk(planner_mutex());
            p = fftw_plan_dft_r2c_1d(static_cast<int>(M), row.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                     FFTW_ESTIMATE);
        }
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                CovKernel k = CovKernel::for_pair(params.pair(i, j), Delta);
                for (long m = 0; m < M; ++m) row[m] = k(std::min(m, M - m) * Delta);
                fftw_execute(p);
                for (long f = 0; f < F; ++f) {
                    spec[(f * d + i) * d + j] = out[f].real();
                    spec[(f * d + j) * d + i] = out[f].real();
                }
            }
        }
        std::lock_guard<std::mutex> lk(planner_mutex());
        fftw_destroy_plan(p);
    }

    factors_.assign(static_cast<size_t>(F) * d * d, 0.0);
    diag_.M = M;
    diag_.min_eigenvalue.assign(M, 0.0);
    double clipped = 0, total = 0;
    for (long f = 0; f < F; ++f) {
        Eigen::Map<Eigen::MatrixXd> S(spec.data() + f * d * d, d, d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        Eigen::VectorXd e = es.eigenvalues();
        double w = (f == 0 || f == M / 2) ? 1.0 : 2.0;  // mirrored frequencies
        diag_.min_eigenvalue[f] = e.minCoeff();
        if (f != 0 && f != M / 2) diag_.min_eigenvalue[M - f] = e.minCoeff();
        for (int k = 0; k < d; ++k) {
            if (e(k) < 0) {
                clipped += w * -e(k);
                e(k) = 0;
            } else {
                total += w * e(k);
            }
        }
        Eigen::Map<Eigen::MatrixXd> A(factors_.data() + f * d * d, d, d);
        A = es.eigenvectors() * e.cwiseSqrt().asDiagonal();
    }
    diag_.clipped_mass = total > 0 ? clipped / total : 0.0;
    diag_.exact = diag_.clipped_mass <= kClipExact;
    if (diag_.clipped_mass > kClipApprox) {
        std::ostringstream os;
        os << "circulant embedding clipped " << diag_.clipped_mass << " of the spectral mass (M=" << M << ")";
        throw EmbeddingError(os.str(), diag_);
    }

    std::vector<std::complex<double>> tmp(M);
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(M), reinterpret_cast<fftw_complex*>(tmp.data()),
                             reinterpret_cast<fftw_complex*>(tmp.data()), FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

FieldSampler::~FieldSampler() {
    std::lock_guard<std::mutex> lk(planner_mutex());
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void FieldSampler::draw_pair(std::uint64_t seed, std::uint64_t s, Eigen::MatrixXd& re, Eigen::MatrixXd& im) const {
    const long M = M_;
    const int d = d_;
    std::vector<std::complex<double>> W(static_cast<size_t>(M) * d);
    std::vector<std::complex<double>> z(d);
    for (long f = 0; f < M; ++f) {
        long fs = std::min(f, M - f);
        for (int m = 0; m < d; ++m) {
            NormalPair g = normal_pair(seed, s, static_cast<std::uint64_t>(f) * d + m);
            z[m] = {g.x, g.y};
        }
        const double* A = factors_.data() + fs * d * d;
        for (int i = 0; i < d; ++i) {
            std::complex<double> acc = 0;
            for (int m = 0; m < d; ++m) acc += A[m * d + i] * z[m];
            W[static_cast<size_t>(i) * M + f] = acc;
        }
    }
    re.resize(d, N_);
    im.resize(d, N_);
    const double scale = 1.0 / std::sqrt(double(M));
    for (int i = 0; i < d; ++i) {
        auto* buf = reinterpret_cast<fftw_complex*>(W.data() + static_cast<size_t>(i) * M);
        fftw_execute_dft(static_cast<fftw_plan>(plan_), buf, buf);
        for (int k = 0; k < N_; ++k) {
            re(i, k) = W[static_cast<size_t>(i) * M + k].real() * scale;
            im(i, k) = W[static_cast<size_t>(i) * M + k].imag() * scale;
        }
    }
}

SimulationResult simulate_field(const ModelParams& params, int N, double Delta, std::uint64_t seed, int n_paths,
                                int workers) {
    if (n_paths < 1) throw StructuralError("n_paths must be >= 1");
    FieldSampler sampler(params, N, Delta);
    SimulationResult res;
    res.diagnostics = sampler.diagnostics();
    res.panels.resize(n_paths);
    const int pairs = (n_paths + 1) / 2;
    const int nt = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1)
    for (int s = 0; s < pairs; ++s) {
        Eigen::MatrixXd re, im;
        sampler.draw_pair(seed, static_cast<std::uint64_t>(s), re, im);
        for (int part = 0; part < 2; ++part) {
            int p = 2 * s + part;
            if (p >= n_paths) break;
            FieldPanel& fp = res.panels[p];
            fp.d = params.d;
            fp.N = N;
            fp.Delta = Delta;
            fp.seed = seed;
            fp.provenance = Provenance::GaussianField;
            fp.data = part == 0 ? re : im;
        }
    }
    return res;
}

std::vector<double> field_means(const ModelParams& params, double Delta) {
    std::vector<double> mu(params.d);
    for (int i = 0; i < params.d; ++i) {
        double H = params.H_mat(i, i), l2 = params.xi_mat(i, i);
        mu[i] = H > 0 ? mu_i(l2, H) : -0.5 * log_kernel_cov(0.0, Delta, l2, params.T);
    }
    return mu;
}

FieldPanel field_to_measure(const FieldPanel& panel, const ModelParams& params, int agg) {
    panel.check();
    if (panel.provenance != Provenance::GaussianField) throw StructuralError("field_to_measure needs a gaussian field");
    if (panel.d != params.d) throw StructuralError("panel and params dimensions differ");
    if (agg < 1 || panel.N % agg != 0) throw StructuralError("agg must divide N");
    if (panel.data.maxCoeff() > 700) {
        std::ostringstream os;
        os << "field value " << panel.data.maxCoeff() << " exceeds 700; exponential would overflow";
        throw std::overflow_error(os.str());
    }
    std::vector<double> mu = field_means(params, panel.Delta);
    FieldPanel out = panel;
    out.N = panel.N / agg;
    out.Delta = panel.Delta * agg;
    out.provenance = Provenance::LogvolMeasure;
    out.data.resize(panel.d, out.N);
    for (int i = 0; i < panel.d; ++i) {
        for (int b = 0; b < out.N; ++b) {
            double mx = panel.data(i, b * agg);
            for (int k = 1; k < agg; ++k) mx = std::max(mx, panel.data(i, b * agg + k));
            double s = 0;
            for (int k = 0; k < agg; ++k) s += std::exp(panel.data(i, b * agg + k) - mx);
            out.data(i, b) = mx + mu[i] + std::log(s / agg);
        }
    }
    return out;
}

FieldPanel field_to_gaussian_proxy(const FieldPanel& panel, const ModelParams& params, int agg) {
    panel.check();
    if (panel.provenance != Provenance::GaussianField) throw StructuralError("proxy needs a gaussian field");
    if (panel.d != params.d) throw StructuralError("panel and params dimensions differ");
    if (agg < 1 || panel.N % agg != 0) throw StructuralError("agg must divide N");
    FieldPanel out = panel;
    out.N = panel.N / agg;
    out.Delta = panel.Delta * agg;
    out.provenance = Provenance::GaussianProxy;
    out.data.resize(panel.d, out.N);
    for (int i = 0; i < panel.d; ++i)
        for (int b = 0; b < out.N; ++b) out.data(i, b) = panel.data.row(i).segment(b * agg, agg).mean();
    return out;
}

PricePanel simulate_prices(const FieldPanel& m, const std::vector<double>& x0, std::uint64_t seed, int substeps) {
    if (m.provenance != Provenance::LogvolMeasure) throw StructuralError("simulate_prices needs a logvol-measure panel");
    if (static_cast<int>(x0.size()) != m.d) throw StructuralError("x0 length differs from d");
    if (substeps < 1) throw StructuralError("substeps must be >= 1");
    PricePanel pp;
    pp.x0 = x0;
    pp.seed = seed;
    pp.X.resize(m.d, m.N + 1);
    if (substeps > 1) pp.realized_logvar.resize(m.d, m.N);
    for (int i = 0; i < m.d; ++i) {
        double x = x0[i];
        pp.X(i, 0) = x;
        for (int k = 0; k < m.N; ++k) {
            double var = m.Delta * std::exp(m.data(i, k)) / substeps;
            double sd = std::sqrt(var);
            double qv = 0;
            for (int s = 0; s < substeps; s += 2) {
                NormalPair g = normal_pair(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k) * ((substeps + 1) / 2) + s / 2);
                double dx = sd * g.x;
                x += dx;
                qv += dx * dx;
                if (s + 1 < substeps) {
                    dx = sd * g.y;
                    x += dx;
                    qv += dx * dx;
                }
            }
            pp.X(i, k + 1) = x;
            if (substeps > 1) pp.realized_logvar(i, k) = std::log(qv / m.Delta);
        }
    }
    return pp;
}

}  // namespace msfbm
