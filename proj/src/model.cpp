#include "msfbm/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace msfbm {

double PairParams::xi() const { return g * lambda_prod(); }

double PairParams::lambda_prod() const { return std::sqrt(lambda_i2 * lambda_j2); }

PairParams PairParams::with_g(double new_g) const {
    PairParams p = *this;
    p.g = new_g;
    return p;
}

ModelParams ModelParams::from_matrices(double T, const Eigen::MatrixXd& H, const Eigen::MatrixXd& xi) {
    ModelParams p;
    p.d = static_cast<int>(H.rows());
    p.T = T;
    p.H_mat = H;
    p.xi_mat = xi;
    p.check_structure();
    for (int i = 0; i < p.d; ++i) {
        p.H_diag.push_back(H(i, i));
        p.lambda2_diag.push_back(xi(i, i));
    }
    return p;
}

ModelParams ModelParams::univariate(double T, double H, double lambda2) {
    return from_matrices(T, Eigen::MatrixXd::Constant(1, 1, H), Eigen::MatrixXd::Constant(1, 1, lambda2));
}

ModelParams ModelParams::homogeneous(int d, double T, double H, double lambda2, double H_off, double g) {
    Eigen::MatrixXd Hm = Eigen::MatrixXd::Constant(d, d, H_off);
    Eigen::MatrixXd xm = Eigen::MatrixXd::Constant(d, d, g * lambda2);
    for (int i = 0; i < d; ++i) {
        Hm(i, i) = H;
        xm(i, i) = lambda2;
    }
    return from_matrices(T, Hm, xm);
}

void ModelParams::check_structure() const {
    if (d < 1) throw StructuralError("d must be >= 1");
    if (H_mat.rows() != d || H_mat.cols() != d) throw StructuralError("H matrix must be d x d");
    if (xi_mat.rows() != d || xi_mat.cols() != d) throw StructuralError("xi matrix must be d x d");
    if (!H_mat.allFinite() || !xi_mat.allFinite()) throw StructuralError("non-finite matrix entry");
    if (!std::isfinite(T)) throw StructuralError("non-finite T");
    if (!H_diag.empty() && static_cast<int>(H_diag.size()) != d) throw StructuralError("H_diag length != d");
    if (!lambda2_diag.empty() && static_cast<int>(lambda2_diag.size()) != d)
        throw StructuralError("lambda2_diag length != d");
}

PairParams ModelParams::pair(int i, int j) const {
    PairParams p;
    p.lambda_i2 = xi_mat(i, i);
    p.lambda_j2 = xi_mat(j, j);
    p.H_i = H_mat(i, i);
    p.H_j = H_mat(j, j);
    p.H_ij = H_mat(i, j);
    p.T = T;
    p.g = i == j ? 1.0 : xi_mat(i, j) / p.lambda_prod();
    return p;
}

namespace {

void add(ValidationReport& r, const char* inv, int i, int j, const std::string& msg) {
    r.push_back({inv, i, j, msg});
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

ValidationReport validate(const ModelParams& p, bool require_definite) {
    p.check_structure();
    ValidationReport r;
    const int d = p.d;
    if (!(p.T > 0)) add(r, "T", -1, -1, "T must be positive, got " + num(p.T));
    for (int i = 0; i < d; ++i) {
        if (!p.H_diag.empty() && p.H_diag[i] != p.H_mat(i, i))
            add(r, "diagonal", i, i, "H_diag differs from H_mat diagonal");
        if (!p.lambda2_diag.empty() && p.lambda2_diag[i] != p.xi_mat(i, i))
            add(r, "diagonal", i, i, "lambda2_diag differs from xi_mat diagonal");
        if (!(p.xi_mat(i, i) > 0)) add(r, "intermittency", i, i, "lambda^2 must be positive");
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double h = p.H_mat(i, j);
            if (j > i) {
                if (p.H_mat(i, j) != p.H_mat(j, i)) add(r, "symmetry", i, j, "H matrix not symmetric");
                if (p.xi_mat(i, j) != p.xi_mat(j, i)) add(r, "symmetry", i, j, "xi matrix not symmetric");
            }
            if (j < i) continue;
            if (h < 0 || h >= 0.5) add(r, "range", i, j, "H entry outside [0, 1/2): " + num(h));
            if (i != j) {
                if (h == 0) add(r, "offdiag-zero", i, j, "off-diagonal co-Hurst must be non-zero");
                double hbar = 0.5 * (p.H_mat(i, i) + p.H_mat(j, j));
                if (h < hbar) add(r, "H1", i, j, "co-Hurst " + num(h) + " below mean marginal Hurst " + num(hbar));
                double li = p.xi_mat(i, i), lj = p.xi_mat(j, j);
                if (li > 0 && lj > 0 && std::abs(p.xi_mat(i, j)) > std::sqrt(li * lj) * (1 + 1e-14))
                    add(r, "cauchy-schwarz", i, j, "|xi_ij| exceeds lambda_i lambda_j");
            }
        }
    }
    Eigen::MatrixXd sym = 0.5 * (p.xi_mat + p.xi_mat.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    double floor = 1e-10 * sym.trace() / d;
    double emin = es.eigenvalues().minCoeff();
    if (emin < -std::abs(floor)) {
        add(r, "H2", -1, -1, "xi not positive semidefinite, min eigenvalue " + num(emin));
    } else if (require_definite && emin <= std::abs(floor)) {
        add(r, "H2-strict", -1, -1, "xi not positive definite, min eigenvalue " + num(emin));
    }
    return r;
}

ValidationReport validate(const PairParams& p) {
    ValidationReport r;
    if (!(p.T > 0)) add(r, "T", -1, -1, "T must be positive");
    if (!(p.lambda_i2 > 0) || !(p.lambda_j2 > 0)) add(r, "intermittency", 0, 1, "lambda^2 must be positive");
    for (double h : {p.H_i, p.H_j, p.H_ij})
        if (h < 0 || h >= 0.5) add(r, "range", 0, 1, "H entry outside [0, 1/2): " + num(h));
    if (p.H_ij < p.Hbar()) add(r, "H1", 0, 1, "co-Hurst below mean marginal Hurst");
    if (std::abs(p.g) > 1) add(r, "cauchy-schwarz", 0, 1, "|g| > 1");
    return r;
}

std::string format_report(const ValidationReport& r) {
    std::ostringstream os;
    for (const auto& v : r) {
        os << v.invariant;
        if (v.i >= 0) os << " (" << v.i << "," << v.j << ")";
        os << ": " << v.message << "\n";
    }
    return os.str();
}

Eigen::MatrixXd g_from_xi(const ModelParams& p) {
    p.check_structure();
    Eigen::VectorXd lam(p.d);
    for (int i = 0; i < p.d; ++i) {
        if (!(p.xi_mat(i, i) > 0)) throw std::domain_error("zero intermittency on diagonal entry " + std::to_string(i));
        lam(i) = std::sqrt(p.xi_mat(i, i));
    }
    Eigen::MatrixXd g(p.d, p.d);
    for (int i = 0; i < p.d; ++i)
        for (int j = 0; j < p.d; ++j) g(i, j) = i == j ? 1.0 : p.xi_mat(i, j) / (lam(i) * lam(j));
    return g;
}

double mu_i(double lambda2, double H) {
    if (H == 0) throw std::domain_error("H = 0: use the log-kernel normalization with a cutoff");
    if (!(H > 0 && H < 0.5)) throw std::domain_error("H must lie in (0, 1/2)");
    return -lambda2 / (4 * H * (1 - 2 * H));
}

nlohmann::json to_json(const ModelParams& p) {
    auto mat = [](const Eigen::MatrixXd& m) {
        nlohmann::json a = nlohmann::json::array();
        for (int i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            a.push_back(row);
        }
        return a;
    };
    return {{"d", p.d}, {"T", p.T}, {"H", mat(p.H_mat)}, {"xi", mat(p.xi_mat)}};
}

ModelParams params_from_json(const nlohmann::json& j) {
    auto mat = [](const nlohmann::json& a, const char* name) {
        if (!a.is_array() || a.empty()) throw StructuralError(std::string("missing matrix ") + name);
        Eigen::MatrixXd m(a.size(), a.size());
        for (size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_array() || a[i].size() != a.size())
                throw StructuralError(std::string("matrix ") + name + " is not square");
            for (size_t k = 0; k < a.size(); ++k) m(i, k) = a[i][k].get<double>();
        }
        return m;
    };
    try {
        Eigen::MatrixXd H = mat(j.at("H"), "H");
        Eigen::MatrixXd xi = mat(j.at("xi"), "xi");
        if (j.contains("d") && j.at("d").get<int>() != H.rows()) throw StructuralError("d does not match matrices");
        return ModelParams::from_matrices(j.at("T").get<double>(), H, xi);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("bad params document: ") + e.what());
    }
}

std::string dump_params(const ModelParams& p) { return to_json(p).dump(2); }

ModelParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open params file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError("cannot parse " + path + ": " + e.what());
    }
    return params_from_json(j);
}

void save_params(const ModelParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << dump_params(p) << "\n";
}

}  // namespace msfbm
