#include <doctest.h>

#include "msfbm/kernels.hpp"
#include "msfbm/panel_io.hpp"
#include "msfbm/simulate.hpp"
#include "msfbm/wick.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace msfbm;

namespace {

struct Stat {
    double mean = 0, se = 0;
};

// mean over paths of a per-path statistic, with its standard error
template <class F>
Stat over_paths(const std::vector<FieldPanel>& panels, F f) {
    std::vector<double> v;
    for (const auto& p : panels) v.push_back(f(p));
    Stat s;
    for (double x : v) s.mean += x / v.size();
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (v.size() - 1) / v.size());
    return s;
}

double lag_product(const Eigen::MatrixXd& X, int i, int j, int k) {
    double s = 0;
    const long n = X.cols() - k;
    for (long t = 0; t < n; ++t) s += X(i, t) * X(j, t + k);
    return s / n;
}

}  // namespace

TEST_CASE("univariate variance and embedding exactness") {
    ModelParams p = ModelParams::univariate(16384, 0.02, 0.05);
    SimulationResult r = simulate_field(p, 16384, 1.0, 42, 200);
    CHECK(r.diagnostics.clipped_mass == 0.0);
    CHECK(r.diagnostics.flag() == "exact");
    CHECK(r.diagnostics.M == 32768);
    Stat v = over_paths(r.panels, [](const FieldPanel& f) { return lag_product(f.data, 0, 0, 0); });
    CHECK(std::abs(v.mean - 1.3020833333333333) <= 3 * v.se);
    Stat m = over_paths(r.panels, [](const FieldPanel& f) { return f.data.row(0).mean(); });
    CHECK(std::abs(m.mean) <= 4 * m.se);
}

TEST_CASE("paper pair cross covariance at lag 0") {
    ModelParams p = ModelParams::homogeneous(2, 16384, 0.02, 0.05, 0.15, 0.5);
    SimulationResult r = simulate_field(p, 16384, 1.0, 7, 100);
    Stat c = over_paths(r.panels, [](const FieldPanel& f) { return lag_product(f.data, 0, 1, 0); });
    CHECK(std::abs(c.mean - msfbm_cross_cov(0, p.pair(0, 1))) <= 3 * c.se);
}

TEST_CASE("decoupled marginals are uncorrelated") {
    ModelParams p = ModelParams::homogeneous(2, 4096, 0.1, 0.05, 0.1, 0.0);
    SimulationResult r = simulate_field(p, 4096, 1.0, 9, 100);
    Stat c = over_paths(r.panels, [](const FieldPanel& f) { return lag_product(f.data, 0, 1, 0); });
    CHECK(std::abs(c.mean) <= 3 * c.se);
}

TEST_CASE("deterministic and independent of worker count") {
    ModelParams p = ModelParams::homogeneous(3, 2048, 0.05, 0.05, 0.2, 0.4);
    SimulationResult a = simulate_field(p, 1024, 1.0, 3, 5, 1);
    SimulationResult b = simulate_field(p, 1024, 1.0, 3, 5, 4);
    SimulationResult c = simulate_field(p, 1024, 1.0, 4, 5, 1);
    for (int k = 0; k < 5; ++k) CHECK((a.panels[k].data.array() == b.panels[k].data.array()).all());
    CHECK_FALSE((a.panels[0].data.array() == c.panels[0].data.array()).all());
    CHECK_FALSE((a.panels[0].data.array() == a.panels[1].data.array()).all());
}

TEST_CASE("permuting marginals permutes the statistics") {
    Eigen::MatrixXd H(3, 3), xi(3, 3);
    H << 0.02, 0.1, 0.2, 0.1, 0.05, 0.15, 0.2, 0.15, 0.1;
    xi << 0.05, 0.02, -0.01, 0.02, 0.04, 0.015, -0.01, 0.015, 0.06;
    ModelParams p = ModelParams::from_matrices(2048, H, xi);
    Eigen::PermutationMatrix<3> P;
    P.indices() << 2, 0, 1;
    ModelParams q = ModelParams::from_matrices(2048, P * H * P.transpose(), P * xi * P.transpose());
    SimulationResult a = simulate_field(p, 2048, 1.0, 1, 60), b = simulate_field(q, 2048, 1.0, 2, 60);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            int pi = P.indices()(i), pj = P.indices()(j);
            Stat sa = over_paths(a.panels, [&](const FieldPanel& f) { return lag_product(f.data, i, j, 3); });
            Stat sb = over_paths(b.panels, [&](const FieldPanel& f) { return lag_product(f.data, pi, pj, 3); });
            CHECK(std::abs(sa.mean - sb.mean) <= 4 * std::hypot(sa.se, sb.se));
        }
}

TEST_CASE("inadmissible or singular parameters are rejected") {
    ModelParams p = ModelParams::homogeneous(2, 1024, 0.1, 0.05, 0.1, 1.0);
    CHECK_THROWS_AS(simulate_field(p, 512, 1.0, 1, 1), std::invalid_argument);
    p = ModelParams::homogeneous(2, 1024, 0.1, 0.05, 0.05, 0.5);
    CHECK_THROWS_AS(simulate_field(p, 512, 1.0, 1, 1), std::invalid_argument);
}

TEST_CASE("measure normalization") {
    ModelParams p = ModelParams::homogeneous(2, 16384, 0.02, 0.05, 0.15, 0.5);
    SimulationResult r = simulate_field(p, 16384, 1.0, 17, 60);
    std::vector<FieldPanel> m;
    for (const auto& f : r.panels) m.push_back(field_to_measure(f, p, 16));
    CHECK(m[0].N == 1024);
    CHECK(m[0].Delta == 16.0);
    CHECK(m[0].provenance == Provenance::LogvolMeasure);
    for (int i = 0; i < 2; ++i) {
        Stat e = over_paths(m, [&](const FieldPanel& f) { return f.data.row(i).array().exp().mean(); });
        CHECK(std::abs(e.mean - 1) <= 3 * e.se);
    }

    ModelParams tiny = ModelParams::univariate(100, 0.1, 1e-300);
    FieldPanel z;
    z.d = 1;
    z.N = 8;
    z.data = Eigen::MatrixXd::Zero(1, 8);
    FieldPanel mz = field_to_measure(z, tiny, 4);
    CHECK(mz.data.cwiseAbs().maxCoeff() < 1e-200);
    z.data(0, 3) = 800;
    CHECK_THROWS_AS(field_to_measure(z, tiny, 4), std::overflow_error);
    CHECK_THROWS_AS(field_to_measure(z, tiny, 3), StructuralError);
}

TEST_CASE("multifractal marginal normalization") {
    ModelParams p = ModelParams::univariate(4096, 0.0, 0.05);
    SimulationResult r = simulate_field(p, 4096, 1.0, 5, 100);
    CHECK(r.diagnostics.flag() != "approximate");
    Stat v = over_paths(r.panels, [](const FieldPanel& f) { return lag_product(f.data, 0, 0, 0); });
    CHECK(std::abs(v.mean - log_kernel_cov(0, 1, 0.05, 4096)) <= 3 * v.se);
    std::vector<FieldPanel> m;
    for (const auto& f : r.panels) m.push_back(field_to_measure(f, p, 8));
    Stat e = over_paths(m, [](const FieldPanel& f) { return f.data.row(0).array().exp().mean(); });
    CHECK(std::abs(e.mean - 1) <= 3 * e.se);
}

TEST_CASE("gaussian proxy") {
    ModelParams p = ModelParams::homogeneous(2, 16384, 0.02, 0.05, 0.15, 0.5);
    SimulationResult r = simulate_field(p, 16384, 1.0, 23, 100);
    FieldPanel id = field_to_gaussian_proxy(r.panels[0], p, 1);
    CHECK((id.data.array() == r.panels[0].data.array()).all());

    std::vector<FieldPanel> g;
    for (const auto& f : r.panels) g.push_back(field_to_gaussian_proxy(f, p, 16));
    CovKernel k0 = CovKernel::power(p.pair(0, 0)), k01 = CovKernel::power(p.pair(0, 1));
    Stat v = over_paths(g, [](const FieldPanel& f) { return lag_product(f.data, 0, 0, 0); });
    CHECK(std::abs(v.mean - k0.riemann_block(0, 1, 16)) <= 3 * v.se);
    int bad = 0;
    for (int lag = 1; lag <= 64; ++lag) {
        Stat c = over_paths(g, [&](const FieldPanel& f) { return lag_product(f.data, 0, 1, lag); });
        if (std::abs(c.mean - k01.riemann_block(16.0 * lag, 1, 16)) > 3 * c.se) ++bad;
    }
    CHECK(bad <= 3);
}

TEST_CASE("increment correlation matches simulated increments") {
    ModelParams p = ModelParams::homogeneous(2, 4096, 0.2, 0.05, 0.3, 0.7);
    SimulationResult r = simulate_field(p, 4096, 1.0, 31, 200);
    const int agg = 32, tau = 8;
    double sxy = 0, sxx = 0, syy = 0;
    std::vector<double> per;
    for (const auto& f : r.panels) {
        FieldPanel g = field_to_gaussian_proxy(f, p, agg);
        double a = 0, b = 0, c = 0;
        for (int t = 0; t + tau < g.N; ++t) {
            double x = g.data(0, t + tau) - g.data(0, t), y = g.data(1, t + tau) - g.data(1, t);
            a += x * y;
            b += x * x;
            c += y * y;
        }
        sxy += a;
        sxx += b;
        syy += c;
        per.push_back(a / std::sqrt(b * c));
    }
    double rho = sxy / std::sqrt(sxx * syy), m = 0, s = 0;
    for (double x : per) m += x / per.size();
    for (double x : per) s += (x - m) * (x - m);
    double se = std::sqrt(s / (per.size() - 1) / per.size());
    double theory = logvol_incr_corr(tau * agg, agg, p.pair(0, 1));
    CHECK(std::abs(rho - theory) <= 3 * se + 2e-3);
}

TEST_CASE("fourth-order moment against the Wick leading term") {
    ModelParams p = ModelParams::homogeneous(2, 2048, 0.3, 0.05, 0.35, 0.6);
    SimulationResult r = simulate_field(p, 2048, 1.0 / 32, 8, 400);
    const int agg = 32;
    std::vector<double> v;
    for (const auto& f : r.panels) {
        FieldPanel g = field_to_gaussian_proxy(f, p, agg);
        double s = 0;
        const int n = g.N - 5;
        for (int t = 0; t < n; ++t) s += std::pow(g.data(0, t), 2) * std::pow(g.data(1, t + 5), 2);
        v.push_back(s / n);
    }
    double m = 0, ss = 0;
    for (double x : v) m += x / v.size();
    for (double x : v) ss += (x - m) * (x - m);
    double se = std::sqrt(ss / (v.size() - 1) / v.size());
    double lead = sia_generalized_moment({{0, 0, 1}, {0, 0, 1}, {1, 5, 1}, {1, 5, 1}}, p);
    CHECK(std::abs(m - lead) <= 3 * se + 0.01 * lead);
}

TEST_CASE("prices") {
    FieldPanel m;
    m.d = 1;
    m.N = 20000;
    m.Delta = 0.5;
    m.provenance = Provenance::LogvolMeasure;
    m.data = Eigen::MatrixXd::Zero(1, m.N);
    PricePanel pp = simulate_prices(m, {1.5}, 3);
    CHECK(pp.X(0, 0) == 1.5);
    double s = 0, s4 = 0;
    for (int k = 0; k < m.N; ++k) {
        double dx = pp.X(0, k + 1) - pp.X(0, k);
        s += dx * dx;
        s4 += dx * dx * dx * dx;
    }
    double var = s / m.N, se = std::sqrt((s4 / m.N - var * var) / m.N);
    CHECK(std::abs(var - 0.5) <= 3 * se);

    m.data.setConstant(-1000);
    PricePanel flat = simulate_prices(m, {2.0}, 3);
    CHECK((flat.X.array() == 2.0).all());

    FieldPanel wrong = m;
    wrong.provenance = Provenance::GaussianField;
    CHECK_THROWS_AS(simulate_prices(wrong, {0.0}, 1), StructuralError);

    m.data.setZero();
    m.N = 2000;
    m.data = Eigen::MatrixXd::Zero(1, m.N);
    double prev = 1e9;
    for (int sub : {4, 64, 1024}) {
        PricePanel q = simulate_prices(m, {0.0}, 5, sub);
        double err = q.realized_logvar.array().abs().mean();
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("panel files round trip") {
    ModelParams p = ModelParams::homogeneous(2, 1024, 0.05, 0.05, 0.2, 0.3);
    FieldPanel f = simulate_field(p, 256, 0.25, 99, 1).panels[0];
    std::stringstream ss;
    write_panel_csv(f, ss);
    FieldPanel g = read_panel_csv(ss);
    CHECK(g.d == 2);
    CHECK(g.N == 256);
    CHECK(g.Delta == 0.25);
    CHECK(g.seed == 99);
    CHECK((g.data.array() == f.data.array()).all());

    auto path = (std::filesystem::temp_directory_path() / "msfbm_panel_test.bin").string();
    f.provenance = Provenance::GaussianProxy;
    write_panel_binary(f, path);
    FieldPanel h = read_panel_binary(path);
    CHECK(h.provenance == Provenance::GaussianProxy);
    CHECK((h.data.array() == f.data.array()).all());
    std::filesystem::remove(path);
}
