#include "commands.hpp"

#include "msfbm/mc.hpp"
#include "msfbm/simulate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace msfbm;
using namespace msfbm::cli;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> params, outdir, format, proxy, residual, sampling, panel;
    std::optional<int> N, replicas, agg, Q, workers, substeps;
    std::optional<double> Delta, T, H, Hprime;
    std::optional<std::uint64_t> seed;
    bool one_step = false;
    std::vector<int> N_list, pair, lags;
    std::vector<double> x0, weights, taus, ratios;
};

void add_flags(CLI::App* s, Flags& f) {
    s->add_option("-c,--config", f.config, "JSON config file; flags override its values");
    s->add_option("-p,--params", f.params, "model parameter JSON file");
    s->add_option("-o,--out", f.outdir, "output directory");
    s->add_option("--N", f.N, "grid length");
    s->add_option("--Delta", f.Delta, "grid step");
    s->add_option("--seed", f.seed, "random seed");
    s->add_option("--replicas", f.replicas, "paths (simulate) or Monte-Carlo replicas");
    s->add_option("--agg", f.agg, "grid points per observation block");
    s->add_option("--Q", f.Q, "lag grid size");
    s->add_option("--T", f.T, "correlation scale override");
    s->add_option("--format", f.format, "csv, json or binary");
    s->add_option("--proxy", f.proxy, "gaussian or measure");
    s->add_option("--workers", f.workers, "worker threads (0: all cores)");
    s->add_option("--residual", f.residual, "C or D moment residuals");
    s->add_option("--sampling", f.sampling, "continuous or riemann block model");
    s->add_flag("--one-step", f.one_step, "skip the second GMM step");
    s->add_option("--N-list", f.N_list, "grid lengths for mc-validate");
    s->add_option("--substeps", f.substeps, "price sub-steps per observation");
    s->add_option("--x0", f.x0, "initial log prices");
    s->add_option("--pair", f.pair, "marginal indices i j")->expected(2);
    s->add_option("--lags", f.lags, "lags in units of Delta");
    s->add_option("--panel", f.panel, "panel file (VolPanel CSV, panel CSV or MSFB1 binary)");
    s->add_option("--weights", f.weights, "index weights");
    s->add_option("--taus", f.taus, "index lags tau");
    s->add_option("--ratios", f.ratios, "Delta / tau values");
    s->add_option("--H", f.H, "co-Hurst exponent used by the ratio bound");
    s->add_option("--Hprime", f.Hprime, "marginal Hurst exponent used by the ratio bound");
}

RunConfig resolve(const std::string& sub, const Flags& f) {
    RunConfig c;
    c.subcommand = sub;
    if (sub == "mc-validate") {
        c.replicas = 50;
        c.agg = 16;
        c.sampling = "riemann";
    }
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError("cannot open config file: " + f.config);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        c.config_dir = fs::path(f.config).parent_path().string();
        if (c.config_dir.empty()) c.config_dir = ".";
        c.apply_json(j);
        c.config_dir.clear();
    }
    if (f.params) {
        c.params_path = *f.params;
        c.params_inline.reset();
    }
    if (f.outdir) c.outdir = *f.outdir;
    if (f.format) c.format = *f.format;
    if (f.proxy) c.proxy = *f.proxy;
    if (f.residual) c.residual = *f.residual;
    if (f.sampling) c.sampling = *f.sampling;
    if (f.panel) c.panel = *f.panel;
    if (f.N) c.N = *f.N;
    if (f.replicas) c.replicas = *f.replicas;
    if (f.agg) c.agg = *f.agg;
    if (f.Q) c.Q = *f.Q;
    if (f.workers) c.workers = *f.workers;
    if (f.substeps) c.substeps = *f.substeps;
    if (f.Delta) c.Delta = *f.Delta;
    if (f.T) c.T = *f.T;
    if (f.H) c.H = *f.H;
    if (f.Hprime) c.Hprime = *f.Hprime;
    if (f.seed) c.seed = *f.seed;
    if (f.one_step) c.two_step = false;
    if (!f.N_list.empty()) c.N_list = f.N_list;
    if (!f.pair.empty()) c.pair = f.pair;
    if (!f.lags.empty()) c.lags = f.lags;
    if (!f.x0.empty()) c.x0 = f.x0;
    if (!f.weights.empty()) c.weights = f.weights;
    if (!f.taus.empty()) c.taus = f.taus;
    if (!f.ratios.empty()) c.ratios = f.ratios;
    c.workers = resolve_workers(c.workers);
    return c;
}

void log_run(const RunConfig& c, int code, double secs) {
    std::ofstream log(fs::path(c.outdir) / "run.log", std::ios::app);
    if (!log) return;
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    log << buf << " " << c.subcommand << " exit=" << code << " seconds=" << secs << " workers=" << c.workers << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate Log S-fBM volatility toolkit"};
    app.require_subcommand(1);
    std::map<std::string, Flags> flags;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"simulate", "simulate log-volatility fields, measures and prices"},
        {"covariance", "evaluate covariance kernels on a lag list"},
        {"calibrate", "GMM calibration of a log-volatility panel"},
        {"mc-validate", "Monte-Carlo validation of the estimator"},
        {"analyze-index", "index log-volatility variance and ratio bounds"}};
    for (const auto& [name, help] : subs) add_flags(app.add_subcommand(name, help), flags[name]);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    RunConfig c;
    int code = kOk;
    auto t0 = std::chrono::steady_clock::now();
    try {
        c = resolve(sub, flags[sub]);
        c.check();
        fs::create_directories(c.outdir);
        nlohmann::json echo = c.to_json();
        if (sub != "calibrate") {
            try {
                echo["params_resolved"] = to_json(c.load_model());
            } catch (const ConfigError&) {
            }
        }
        {
            std::ofstream out(fs::path(c.outdir) / "resolved_config.json");
            out << echo.dump(2) << "\n";
        }
        if (sub == "simulate")
            code = cmd_simulate(c);
        else if (sub == "covariance")
            code = cmd_covariance(c);
        else if (sub == "calibrate")
            code = cmd_calibrate(c);
        else if (sub == "mc-validate")
            code = cmd_mc_validate(c);
        else
            code = cmd_analyze_index(c);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kConfig;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kConfig;
    } catch (const EmbeddingError& e) {
        std::cerr << "embedding failed: " << e.what() << " (clipped mass " << e.diagnostics.clipped_mass << ")\n";
        code = kEmbedding;
    } catch (const std::overflow_error& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        code = kEmbedding;
    } catch (const McHarnessError& e) {
        std::cerr << "calibration degraded: " << e.what() << "\n";
        code = kDegraded;
    } catch (const DegradedError& e) {
        std::cerr << "calibration degraded: " << e.what() << "\n";
        code = kDegraded;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = kFailure;
    }
    if (!c.subcommand.empty() && fs::is_directory(c.outdir))
        log_run(c, code, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return code;
}
