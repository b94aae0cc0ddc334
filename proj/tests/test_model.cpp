#include <doctest.h>

#include "msfbm/model.hpp"

#include <cmath>
#include <filesystem>

using namespace msfbm;

namespace {

ModelParams pair_model(double g = 0.5) { return ModelParams::homogeneous(2, 16384, 0.02, 0.05, 0.15, g); }

bool has(const ValidationReport& r, const std::string& name, int i = -2, int j = -2) {
    for (const auto& v : r)
        if (v.invariant == name && (i == -2 || (v.i == i && v.j == j))) return true;
    return false;
}

}  // namespace

TEST_CASE("paper pair parameters are admissible") {
    CHECK(validate(pair_model()).empty());
    CHECK(validate(pair_model(), true).empty());
    CHECK(validate(ModelParams::univariate(100, 0.1, 0.05)).empty());
}

TEST_CASE("validate names every violated invariant") {
    ModelParams p = pair_model();
    p.H_mat(0, 1) = p.H_mat(1, 0) = 0.01;
    auto r = validate(p);
    REQUIRE(r.size() == 1);
    CHECK(has(r, "H1", 0, 1));

    p = pair_model();
    p.xi_mat(0, 1) = 0.06;
    p.xi_mat(1, 0) = 0.06;
    r = validate(p);
    CHECK(has(r, "cauchy-schwarz", 0, 1));
    CHECK(has(r, "H2"));

    p = pair_model();
    p.H_mat(0, 1) = 0.16;
    CHECK(has(validate(p), "symmetry", 0, 1));

    p = ModelParams::homogeneous(2, 10, 0.0, 0.05, 0.0, 0.5);
    CHECK(has(validate(p), "offdiag-zero", 0, 1));
    CHECK_FALSE(has(validate(p), "range"));

    p = pair_model();
    p.H_mat(0, 0) = 0.5;
    p.H_diag[0] = 0.5;
    CHECK(has(validate(p), "range", 0, 0));

    p = pair_model();
    p.xi_mat(1, 1) = 0;
    p.lambda2_diag[1] = 0;
    CHECK(has(validate(p), "intermittency", 1, 1));
}

TEST_CASE("validate is pure") {
    ModelParams p = pair_model();
    p.H_mat(0, 1) = p.H_mat(1, 0) = 0.01;
    CHECK(format_report(validate(p)) == format_report(validate(p)));
}

TEST_CASE("strict definiteness only on request") {
    ModelParams p = ModelParams::homogeneous(2, 100, 0.1, 0.05, 0.1, 1.0);
    CHECK(validate(p).empty());
    CHECK(has(validate(p, true), "H2-strict"));
}

TEST_CASE("structural errors are distinct from admissibility") {
    Eigen::MatrixXd H(2, 2), xi(3, 3);
    H << 0.1, 0.1, 0.1, 0.1;
    xi.setIdentity();
    CHECK_THROWS_AS(ModelParams::from_matrices(1, H, xi), StructuralError);
    ModelParams p = pair_model();
    p.xi_mat(0, 1) = std::nan("");
    CHECK_THROWS_AS(validate(p), StructuralError);
}

TEST_CASE("pair restrictions of admissible models are admissible") {
    ModelParams p = ModelParams::homogeneous(4, 1000, 0.02, 0.06, 0.12, 0.9);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(validate(p.pair(i, j)).empty());
    PairParams q = p.pair(0, 1);
    CHECK(q.xi() == doctest::Approx(0.9 * 0.06).epsilon(1e-15));
    CHECK(p.pair(2, 2).diagonal());
}

TEST_CASE("co-intermittency correlations") {
    CHECK(g_from_xi(pair_model())(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    ModelParams p = pair_model(-0.99);
    CHECK(p.xi_mat(0, 1) == doctest::Approx(-0.0495).epsilon(1e-14));
    CHECK(g_from_xi(p)(0, 1) == doctest::Approx(-0.99).epsilon(1e-14));
    Eigen::MatrixXd H = Eigen::MatrixXd::Constant(3, 3, 0.1);
    Eigen::MatrixXd xi = Eigen::Vector3d(0.05, 0.02, 0.07).asDiagonal();
    CHECK(g_from_xi(ModelParams::from_matrices(1, H, xi)).isApprox(Eigen::MatrixXd::Identity(3, 3)));

    ModelParams r = ModelParams::homogeneous(3, 50, 0.05, 0.04, 0.2, 0.3);
    r.xi_mat(1, 1) = r.lambda2_diag[1] = 0.09;
    r.xi_mat(0, 2) = r.xi_mat(2, 0) = -0.011;
    Eigen::MatrixXd g = g_from_xi(r);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double back = g(i, j) * std::sqrt(r.xi_mat(i, i) * r.xi_mat(j, j));
            CHECK(std::abs(back - r.xi_mat(i, j)) <= 1e-14 * std::abs(r.xi_mat(i, j)));
        }
    r.xi_mat(2, 2) = 0;
    CHECK_THROWS(g_from_xi(r));
}

TEST_CASE("normalizing mean") {
    CHECK(mu_i(0.05, 0.02) == doctest::Approx(-0.05 / (4 * 0.02 * 0.96)).epsilon(1e-15));
    CHECK(mu_i(0.05, 0.02) == doctest::Approx(-0.6510416666666666).epsilon(1e-14));
    CHECK(mu_i(0.06, 0.25) == doctest::Approx(-0.12).epsilon(1e-15));
    CHECK(mu_i(1e-300, 0.1) == doctest::Approx(0.0));
    CHECK_THROWS(mu_i(0.05, 0.0));
}

TEST_CASE("json round trip is lossless") {
    ModelParams p = ModelParams::homogeneous(3, 16384, 0.0, 0.05, 0.1234567890123456, 0.1 / 3);
    p.xi_mat(0, 0) = p.lambda2_diag[0] = 0.1 / 7;
    p.xi_mat(0, 1) = p.xi_mat(1, 0) = 0.01 / 3;
    ModelParams q = params_from_json(nlohmann::json::parse(dump_params(p)));
    CHECK(q.d == 3);
    CHECK(q.T == p.T);
    CHECK((q.H_mat.array() == p.H_mat.array()).all());
    CHECK((q.xi_mat.array() == p.xi_mat.array()).all());

    auto path = std::filesystem::temp_directory_path() / "msfbm_params_test.json";
    save_params(p, path.string());
    ModelParams r = load_params(path.string());
    CHECK((r.xi_mat.array() == p.xi_mat.array()).all());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(params_from_json(nlohmann::json::parse(R"({"d":2,"T":1,"H":[[0.1]],"xi":[[0.1]]})")),
                    StructuralError);
}
