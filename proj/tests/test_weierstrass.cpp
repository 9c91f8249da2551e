#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace maxperiodic;
using namespace maxperiodic::weierstrass;
using curve::CurvePoint;
using curve::Sheet;

TEST_SUITE("weierstrass") {
    TEST_CASE("principal function with divisor of z - p matches the closed form") {
        const auto& P = testing::reference();
        cplx p(-0.4, 0.7);
        CurvePoint A = CurvePoint::at(p), B = curve::hyperelliptic_involution(A);
        Divisor num = Divisor::of({A, B});
        Divisor den = Divisor::of({CurvePoint::infinity(Sheet::plus), CurvePoint::infinity(Sheet::minus)});
        PrincipalFunction f = principal_function(P.curve, P.pd, num, den);
        CHECK(f.residual < 1e-9);
        for (cplx z : {cplx(0.3, 0.4), cplx(-1.5, -0.8), cplx(2.6, 1.1)})
            for (Sheet s : {Sheet::plus, Sheet::minus}) {
                cplx expect = (z - p) / (1.0 - p);
                CHECK(std::abs(f(CurvePoint::at(z, s)) - expect) < 1e-9 * std::abs(expect));
            }
    }

    TEST_CASE("non-principal divisor raises an obstruction carrying the lattice distance") {
        const auto& P = testing::reference();
        Divisor num = Divisor::of({CurvePoint::at({0.3, 0.5})}), den = Divisor::of({CurvePoint::at({-0.6, 1.1})});
        try {
            principal_function(P.curve, P.pd, num, den);
            FAIL("expected an obstruction");
        } catch (const ObstructionError& e) {
            CHECK(e.residual > 1e-3);
            CHECK(e.code() == ExitCode::obstruction);
        }
    }

    TEST_CASE("certificates on the reference surface") {
        const auto& W = testing::reference().W;
        const auto& c = W.cert;
        CHECK(c.abel_g < 1e-7);
        CHECK(c.abel_f < 1e-7);
        CHECK(c.g_modulus_on_slits < 1e-7);
        CHECK(c.g_mirror < 1e-7);
        CHECK(c.phi3_antisymmetry < 1e-7);
        CHECK(c.conformality < 1e-9);
        CHECK(c.degree_winding == W.curve.genus() + 1);
        CHECK(std::abs(c.fitted_r - 1) < 1e-7);
    }

    TEST_CASE("Phi is null and g is unimodular on the slits") {
        const auto& W = testing::reference().W;
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> U(-3, 3);
        for (int k = 0; k < 100; ++k) {
            CurvePoint p = CurvePoint::at({U(rng), U(rng)}, k % 2 ? Sheet::plus : Sheet::minus);
            if (W.curve.distance_to_slits(p.z) < 1e-2 || std::abs(p.z - W.e) < 1e-2) continue;
            Eigen::Vector3cd Phi = W.Phi_at(p);
            cplx q = Phi[0] * Phi[0] + Phi[1] * Phi[1] - Phi[2] * Phi[2];
            CHECK(std::abs(q) < 1e-9 * Phi.squaredNorm());
        }
        for (int j = 0; j < W.curve.slit_count(); ++j) {
            auto s = W.curve.slit(j);
            for (double t = 0.1; t < 1; t += 0.2) {
                CurvePoint p = CurvePoint::on_slit(s.a + t * (s.b - s.a), 1);
                CHECK(std::abs(std::abs(W.g(p)) - 1) < 1e-7);
            }
        }
    }

    TEST_CASE("flux is timelike on every slit loop and the end loop translates by one period") {
        const auto& W = testing::reference().W;
        Tracker T(W);
        for (int i = 0; i < W.curve.slit_count(); ++i) {
            FluxVector f = flux(T, a_loop(W, i), "a" + std::to_string(i));
            CHECK(f.causal == domain::Causal::timelike);
            Eigen::Vector3cd I = cycle_integral(T, a_loop(W, i));
            CHECK(I.real().norm() < 1e-8);
        }
        Eigen::Vector3cd E = cycle_integral(T, e_loop(W));
        CHECK(std::abs(std::abs(E[0].real()) - 1) < 1e-8);
        CHECK(std::abs(E[1].real()) < 1e-8);
        CHECK(std::abs(E[2].real()) < 1e-8);
    }

    TEST_CASE("tracker integrates to the same point along different paths") {
        const auto& W = testing::reference().W;
        Tracker T(W);
        CurvePoint p = CurvePoint::at({-0.3, 0.9});
        TrackState a = T.from_base(p);
        curve::Planner pl;
        pl.height = 2.2;
        pl.obstacles = W.obstacles(Sheet::plus);
        TrackState b = T.along(TrackState{}, curve::path_from_base(W.curve, p, pl));
        // Re I agrees modulo the translation period
        Eigen::Vector3d d = (a.I - b.I).real();
        d[0] -= std::round(d[0]);
        CHECK(d.norm() < 1e-8);
        CHECK(std::abs(std::exp(a.lg) - std::exp(b.lg)) < 1e-8 * std::abs(std::exp(a.lg)));
    }

    TEST_CASE("flipping eps0 is the point reflection through q0") {
        const auto& P = testing::reference();
        domain::MinkowskiVector q0{0.1, -0.2, 0.3};
        WeierstrassData A = build(P.curve, P.pd, P.sol.divisor, 0.0, 1, q0, {1e-7, 1e-11, 50});
        WeierstrassData B = build(P.curve, P.pd, P.sol.divisor, 0.0, -1, q0, {1e-7, 1e-11, 50});
        CHECK(B.r == doctest::Approx(-A.r));
        surface::Immersion ia(A), ib(B);
        for (cplx z : {cplx(0.3, 0.6), cplx(-1.4, -0.4), cplx(3.0, 0.2)}) {
            auto xa = ia.at(CurvePoint::at(z)), xb = ib.at(CurvePoint::at(z));
            CHECK(std::abs((xa.x2 - q0.x2) + (xb.x2 - q0.x2)) < 1e-9);
            CHECK(std::abs((xa.x3 - q0.x3) + (xb.x3 - q0.x3)) < 1e-9);
            CHECK(std::abs(surface::wrap_diff((xa.x1 - q0.x1) + (xb.x1 - q0.x1))) < 1e-9);
        }
        CHECK(std::abs(A.g_infinity() - B.g_infinity()) < 1e-12);
    }
}
