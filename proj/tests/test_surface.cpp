#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace maxperiodic;
using namespace maxperiodic::surface;

namespace {

struct Built {
    Immersion im;
    Mark mark;
    MaximalGraphMesh mesh;
    explicit Built(const WeierstrassData& W) : im(W), mark(extract_mark(im)) {
        MeshSpec ms;
        ms.h = 1.0 / 20;
        mesh = integrate_immersion(im, mark, ms);
    }
};

const Built& built() {
    static Built b(testing::reference().W);
    return b;
}

}  // namespace

TEST_SUITE("surface") {
    TEST_CASE("wrap helpers") {
        CHECK(wrap_diff(0.75) == doctest::Approx(-0.25));
        CHECK(wrap_diff(-0.75) == doctest::Approx(0.25));
        CHECK(wrap01(-0.25) == doctest::Approx(0.75));
        CHECK(wrap01(3.5) == doctest::Approx(0.5));
    }

    TEST_CASE("stencil vanishes on planes and is second order on the catenoid") {
        auto plane = [](int i, int j) { return 0.3 * i - 0.2 * j; };
        CHECK(std::abs(pde_stencil(plane, 3, 4, 0.1)) < 1e-12);
        auto err = [](double h) {
            auto u = [h](int i, int j) { return catenoid::profile(1.0, std::hypot(2 + i * h, 1 + j * h)); };
            return std::abs(pde_stencil(u, 0, 0, h));
        };
        double r = err(0.02) / err(0.01);
        CHECK(r > 3.5);
        CHECK(r < 4.5);
    }

    TEST_CASE("singular points: slit images collapse to points") {
        const auto& b = built();
        REQUIRE(b.mark.q.size() == 2);
        for (double s : b.mark.spread) CHECK(s < 1e-10);
    }

    TEST_CASE("period closure on the independent cycles") {
        const auto& b = built();
        PeriodReport pr = period_closure(b.im, b.mark);
        CHECK(pr.closure < 1e-6);
        CHECK(std::abs(std::abs(pr.e_translation) - 1) < 1e-6);
        for (double x : pr.b_identity) CHECK(x < 1e-6);
        for (const auto& c : pr.cycles)
            if (c.name != "e") CHECK(c.causal == domain::Causal::timelike);
    }

    TEST_CASE("ends: horizontal E1, spacelike E2 with c in (-1, 1)") {
        const auto& b = built();
        EndData ed = end_data(b.im);
        CHECK(ed.e1.monotone);
        CHECK(ed.e2.monotone);
        CHECK(std::abs(ed.c) < 1);
        CHECK(std::abs(ed.e1.normal.x1) < 1e-9);
        CHECK(std::abs(ed.e1.normal.x2) < 1e-9);
        CHECK(std::abs(ed.c - b.im.data().g_infinity().real()) < 1e-12);
    }

    TEST_CASE("cone points: slope and gradient tend to one") {
        const auto& b = built();
        for (const auto& cr : cone_asymptotics(b.im, b.mark)) {
            CHECK(cr.slope_increasing);
            CHECK(cr.grad_increasing);
            CHECK(std::abs(cr.rings.back().slope - 1) < 1e-2);
        }
    }

    TEST_CASE("mesh: complete, graph, normals match the Gauss map, spacelike") {
        const auto& m = built().mesh;
        CHECK(m.holes == 0);
        CHECK(m.max_normal_defect < 1e-7);
        CHECK(m.recheck_defect < 1e-9);
        CHECK(m.graph_defect < 1e-9);
        CHECK(m.wrap_jump < 0.5);
        auto sp = spacelike_check(m, built().mark, 0.2);
        CHECK(sp.max_grad < 1);
        CHECK(sp.fd_agreement < 0.05);
        for (int i = 0; i < m.nx; ++i)
            for (int j = 0; j < m.ny; ++j) {
                const Vertex& v = m.at(i, j);
                CHECK(std::abs(wrap_diff(v.X.x1 - i * m.h)) < 1e-9);
                CHECK(std::abs(v.X.x2 - (m.x2lo + j * m.h)) < 1e-9);
            }
    }

    TEST_CASE("PDE residual decreases under refinement") {
        const auto& b = built();
        MeshSpec ms;
        ms.h = 1.0 / 40;
        auto fine = integrate_immersion(b.im, b.mark, ms);
        double r0 = pde_residual(b.mesh, b.mark, 0.2).sup, r1 = pde_residual(fine, b.mark, 0.2).sup;
        CHECK(r1 < r0 / 3);
    }

    TEST_CASE("translating q0 translates every singular point and fixes c") {
        ModuliParams p;
        p.branch = {-2, -1, 0.5, 2};
        S2Point a = s2_point(p);
        p.q0 = {0, 0.37, 0};
        S2Point b = s2_point(p, a.divisor);
        REQUIRE(a.ok);
        REQUIRE(b.ok);
        REQUIRE(a.coords.size() == 7);
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(wrap_diff(b.coords[3 * j] - a.coords[3 * j])) < 1e-9);
            CHECK(std::abs(b.coords[3 * j + 1] - a.coords[3 * j + 1] - 0.37) < 1e-9);
            CHECK(std::abs(b.coords[3 * j + 2] - a.coords[3 * j + 2]) < 1e-9);
        }
        CHECK(std::abs(b.coords[6] - a.coords[6]) < 1e-12);
    }

    TEST_CASE("constant sequence has zero convergence error") {
        ModuliParams p;
        p.branch = {-2, -1, 0.5, 2};
        auto rep = convergence_demo(p, {0.2, -0.1, 0.1, 0}, 0.0, 2, 4);
        for (const auto& r : rep.rows) {
            CHECK(r.sup_error < 1e-12);
            CHECK(r.mark_error < 1e-12);
        }
    }

    TEST_CASE("catenoid oracle on a coarse grid") {
        catenoid::Spec s;
        s.h = 0.05;
        s.half_width = 3;
        s.exclusion = 2;
        auto S = catenoid::build(s);
        auto r = catenoid::diagnose(s, S);
        CHECK(r.profile_defect < 1e-10);
        CHECK(r.symmetry_defect < 1e-10);
        CHECK(r.gradient_defect < 1e-12);
        CHECK(r.max_grad < 1);
        CHECK(std::abs(r.slope - 1) < 1e-3);
        for (double t = 0.1; t < 6; t += 0.9) {
            cplx z = std::polar(1.7, t);
            auto X = catenoid::X(1.0, z);
            CHECK(std::abs(std::hypot(X.x1, X.x2) - std::sinh(X.x3)) < 1e-12);
        }
    }
}
