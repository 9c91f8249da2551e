#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace maxperiodic;
using namespace maxperiodic::curve;

TEST_SUITE("curve") {
    TEST_CASE("branch validation") {
        CHECK(validate_branch({-2, -1, 0.5, 2}).empty());
        CHECK_FALSE(validate_branch({-1, -2, 0.5, 2}).empty());      // unsorted
        CHECK_FALSE(validate_branch({-2, -1, 1.5, 2}).empty());      // 1 outside the last slit
        CHECK_FALSE(validate_branch({-2, -1, 0.5}).empty());         // odd count
        CHECK_FALSE(validate_branch({-2, 0.1, 0.5, 2}).empty());     // sign pattern
        CHECK_THROWS_AS(RealHyperellipticCurve({-2, -1, 3, 4}), ValidationError);
    }

    TEST_CASE("slit indexing") {
        RealHyperellipticCurve c({-3, -2, -1.5, -0.5, 0.2, 1.7});
        CHECK(c.genus() == 2);
        CHECK(c.slit(0).a == 0.2);
        CHECK(c.slit(1).a == -3);
        CHECK(c.slit(2).b == -0.5);
        CHECK(c.slit_containing(1.0) == 0);
        CHECK(c.slit_containing(-1.0) == 2);
        CHECK(c.slit_containing(0.0) == -1);
    }

    TEST_CASE("w squares to the branch polynomial on both sheets") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> U(-4, 4);
        RealHyperellipticCurve c(testing::random_branch(rng, 2));
        for (int k = 0; k < 200; ++k) {
            cplx z(U(rng), U(rng));
            cplx p = 1;
            for (double b : c.branch()) p *= z - b;
            cplx w = c.eval_w(z, Sheet::plus);
            CHECK(std::abs(w * w - p) < 1e-12 * std::abs(p));
            CHECK(std::abs(c.eval_w(z, Sheet::minus) + w) == 0);
        }
    }

    TEST_CASE("w is real on the plus sheet: w(conj z) = conj w(z)") {
        RealHyperellipticCurve c({-2, -1, 0.5, 2});
        for (double x = -3; x < 3; x += 0.37)
            for (double y = 0.05; y < 2; y += 0.41) {
                cplx z(x, y);
                CHECK(std::abs(c.w_plus(std::conj(z)) - std::conj(c.w_plus(z))) < 1e-13 * std::abs(c.w_plus(z)));
            }
    }

    TEST_CASE("involutions are involutive") {
        CurvePoint p = CurvePoint::at({0.3, 0.8}, Sheet::plus);
        CHECK(same_point(mirror_involution(mirror_involution(p)), p));
        CHECK(same_point(hyperelliptic_involution(hyperelliptic_involution(p)), p));
        CurvePoint j = mirror_involution(p);
        CHECK(j.sheet == Sheet::minus);
        CHECK(std::abs(j.z - std::conj(p.z)) == 0);
    }

    TEST_CASE("holomorphic basis has the declared mirror symmetry") {
        std::mt19937 rng(2);
        for (int n = 1; n <= 3; ++n) {
            RealHyperellipticCurve c(testing::random_branch(rng, n));
            auto basis = holomorphic_basis_raw(c);
            CHECK(static_cast<int>(basis.size()) == n);
            for (const auto& f : basis) CHECK(symmetry_defect(c, f) < 1e-12);
        }
    }

    TEST_CASE("third-kind pair has residues +1 and -1") {
        RealHyperellipticCurve c({-2, -1, 0.5, 2});
        CurvePoint P = CurvePoint::at({0.2, 0.6}), Q = CurvePoint::at({-0.5, -0.9}, Sheet::minus);
        DifferentialForm f = third_kind_pair(c, P, Q);
        CHECK(std::abs(residue(c, f.coefficient(), P, 0.05) - 1.0) < 1e-10);
        CHECK(std::abs(residue(c, f.coefficient(), Q, 0.05) + 1.0) < 1e-10);
        CHECK(std::abs(residue(c, f.coefficient(), CurvePoint::at({0.2, -0.6}), 0.05)) < 1e-10);
    }

    TEST_CASE("reference form nu has residues at e and on both points over infinity") {
        RealHyperellipticCurve c({-2, -1, 0.5, 2});
        DifferentialForm nu = reference_nu(c, 0.0);
        cplx r0 = residue(c, nu.coefficient(), CurvePoint::at(0.0), 0.05);
        cplx r1 = residue(c, nu.coefficient(), CurvePoint::at(0.0, Sheet::minus), 0.05);
        CHECK(std::abs(r0 + r1) < 1e-10);
        cplx ri = residue(c, nu.coefficient(), CurvePoint::infinity(Sheet::plus));
        CHECK(std::abs(ri) > 1e-3);
    }

    TEST_CASE("detour re-integration: homotopic paths give equal integrals") {
        std::mt19937 rng(19);
        for (int trial = 0; trial < 4; ++trial) {
            RealHyperellipticCurve c(testing::random_branch(rng, 1 + trial % 2));
            auto basis = holomorphic_basis_raw(c);
            for (cplx z : {cplx(-0.4, 0.7), cplx(-1.3, -0.5), cplx(2.5, 0.2)}) {
                CurvePoint t = CurvePoint::at(z);
                Planner low, high;
                low.height = 0.5;
                high.height = 1.7;
                auto p1 = path_from_base(c, t, low), p2 = path_from_base(c, t, high);
                for (const auto& f : basis) {
                    cplx a = integrate_form(c, f, p1, {1e-13, 20, 40}).value;
                    cplx b = integrate_form(c, f, p2, {1e-13, 20, 40}).value;
                    CHECK(std::abs(a - b) < 1e-11);
                }
            }
        }
    }

    TEST_CASE("collapsed slit integral equals the loop integral") {
        RealHyperellipticCurve c({-2, -1, 0.5, 2});
        auto f = [](cplx z, cplx w) { return 1.0 / w + 0.0 * z; };
        cplx collapsed = slit_loop_integral(c, 1, f, {1e-13, 20, 40});
        ContourPath loop{Segment::joukowski(c.slit(1), 0.3, 0.3, 0, 2 * M_PI)};
        cplx circled = integrate(c, loop, f, quad::Options{1e-13, 20, 40});
        CHECK(std::abs(collapsed - circled) < 1e-11);
    }
}
