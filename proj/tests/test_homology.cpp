#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"

using namespace maxperiodic;
using namespace maxperiodic::homology;

namespace {

struct Certs {
    double delta, re, sym;
};

Certs certs(const PeriodData& pd) {
    int n = pd.n;
    return {(pd.eta_a - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), pd.Pi.real().cwiseAbs().maxCoeff(),
            (pd.Pi - pd.Pi.transpose()).cwiseAbs().maxCoeff()};
}

}  // namespace

TEST_SUITE("homology") {
    TEST_CASE("genus one period matches the AGM oracle") {
        std::vector<double> b{-2, -1, 0.5, 2};
        curve::RealHyperellipticCurve c(b);
        auto pd = dual_basis_and_periods(c, build_basis(c));
        CHECK(std::abs(pd.Pi(0, 0) - cplx(0, testing::elliptic_tau(b))) < 1e-10);
    }

    TEST_CASE("random configurations: dual basis, imaginary and symmetric periods") {
        std::mt19937 rng(2024);
        for (int n = 1; n <= 3; ++n)
            for (int trial = 0; trial < 3; ++trial) {
                auto b = testing::random_branch(rng, n);
                curve::RealHyperellipticCurve c(b);
                auto pd = dual_basis_and_periods(c, build_basis(c));
                Certs k = certs(pd);
                CAPTURE(n);
                CHECK(k.delta < 1e-10);
                CHECK(k.re < 1e-10);
                CHECK(k.sym < 1e-9);
                // positive definite imaginary part
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pd.Pi.imag());
                CHECK(es.eigenvalues().minCoeff() > 0);
                if (n == 1) CHECK(std::abs(pd.Pi(0, 0).imag() - testing::elliptic_tau(b)) < 1e-8);
            }
    }

    TEST_CASE("intersection numbers of the basis are canonical") {
        curve::RealHyperellipticCurve c({-3, -2, -1.5, -0.5, 0.2, 1.7});
        auto B = build_basis(c);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                CHECK(intersection_number(c, B.a[j], B.b[k]) == (j == k ? 1 : 0));
                CHECK(intersection_number(c, B.a[j], B.a[k]) == 0);
            }
    }

    TEST_CASE("loop a-periods agree with collapsed slit integrals") {
        curve::RealHyperellipticCurve c({-3, -2, -1.5, -0.5, 0.2, 1.7});
        auto B = build_basis(c);
        auto pd = dual_basis_and_periods(c, B);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                cplx v = curve::integrate_form(c, pd.eta_form(k), B.a[j].path, {1e-13, 20, 40}).value;
                CHECK(std::abs(v - (j == k ? 1.0 : 0.0)) < 1e-10);
            }
    }

    TEST_CASE("period table CSV round-trips") {
        curve::RealHyperellipticCurve c({-3, -2, -1.5, -0.5, 0.2, 1.7});
        auto pd = dual_basis_and_periods(c, build_basis(c));
        std::ostringstream os;
        write_periods_csv(os, pd, "abc123");
        std::string s = os.str();
        CHECK(s.find("\r\n") != std::string::npos);
        std::istringstream is(s);
        std::string line;
        std::getline(is, line);
        CHECK(line.rfind("config_hash,form,a1_re", 0) == 0);
        for (int j = 0; j < 2; ++j) {
            std::getline(is, line);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::vector<std::string> f;
            std::stringstream ls(line);
            for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
            REQUIRE(f.size() == 2 + 8);
            CHECK(f[0] == "abc123");
            for (int k = 0; k < 2; ++k) {
                CHECK(std::stod(f[6 + 2 * k]) == pd.Pi(k, j).real());
                CHECK(std::stod(f[7 + 2 * k]) == pd.Pi(k, j).imag());
            }
        }
    }
}
