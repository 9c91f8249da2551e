#include <random>

#include "doctest.h"
#include "maxperiodic/domain.hpp"
#include "maxperiodic/errors.hpp"

using namespace maxperiodic;
using namespace maxperiodic::domain;

TEST_SUITE("domain") {
    TEST_CASE("minkowski inner product and causal classes") {
        MinkowskiVector t{0, 0, 1}, s{1, 0, 0}, l{1, 0, 1};
        CHECK(minkowski_inner(t, t) == -1);
        CHECK(minkowski_inner(s, s) == 1);
        CHECK(classify(t) == Causal::timelike);
        CHECK(classify(s) == Causal::spacelike);
        CHECK(classify(l, 1e-12) == Causal::lightlike);
        CHECK(classify({0, 0, 0}) == Causal::spacelike);
    }

    TEST_CASE("lorentz cross product is orthogonal to its factors") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> U(-1, 1);
        for (int k = 0; k < 50; ++k) {
            MinkowskiVector u{U(rng), U(rng), U(rng)}, v{U(rng), U(rng), U(rng)}, w{U(rng), U(rng), U(rng)};
            MinkowskiVector x = lorentz_cross(u, v);
            CHECK(std::abs(minkowski_inner(x, u)) < 1e-14);
            CHECK(std::abs(minkowski_inner(x, v)) < 1e-14);
            double det = u.x1 * (v.x2 * w.x3 - v.x3 * w.x2) - u.x2 * (v.x1 * w.x3 - v.x3 * w.x1) +
                         u.x3 * (v.x1 * w.x2 - v.x2 * w.x1);
            CHECK(std::abs(minkowski_inner(x, w) - det) < 1e-14);
        }
    }

    TEST_CASE("stereographic image lies on the unit hyperboloid") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> U(-3, 3);
        for (int k = 0; k < 100; ++k) {
            cplx z(U(rng), U(rng));
            if (std::abs(std::abs(z) - 1) < 1e-3) continue;
            MinkowskiVector N = stereographic(z);
            CHECK(std::abs(minkowski_inner(N, N) + 1) < 1e-10 * (1 + std::abs(N.x3) * std::abs(N.x3)));
            CHECK(classify(N) == Causal::timelike);
        }
        MinkowskiVector Ninf = stereographic(cplx(std::numeric_limits<double>::infinity(), 0));
        CHECK(std::abs(minkowski_inner(Ninf, Ninf) + 1) < 1e-14);
        CHECK_THROWS_AS(stereographic(cplx(0, 1)), ValidationError);
    }

    TEST_CASE("circular domain validation") {
        CircularDomainParams v{1, 2.0, {cplx(-3, 0)}, {1.0, 0.5}};
        CHECK(tn_validate(v).valid);
        auto bad = v;
        bad.radii[0] = 0.7;
        CHECK_FALSE(tn_validate(bad).valid);
        bad = v;
        bad.centers[0] = cplx(0.2, 0);
        CHECK_FALSE(tn_validate(bad).valid);
        bad = v;
        bad.centers[0] = cplx(3, 0.5);
        CHECK(tn_validate(bad).violation.find("intersect") != std::string::npos);
        bad = v;
        bad.c0 = 0.9;
        CHECK_FALSE(tn_validate(bad).valid);
    }

    TEST_CASE("schwarz reflection fixes the outer circle and is an involution") {
        CircularDomainParams v{0, 2.5, {}, {1.5}};
        for (double t = 0; t < 6; t += 0.7) {
            cplx on = 2.5 + 1.5 * std::polar(1.0, t);
            CHECK(std::abs(schwarz_reflect(v, on) - on) < 1e-13);
            cplx z(0.3 * t, -0.2);
            CHECK(std::abs(schwarz_reflect(v, schwarz_reflect(v, z)) - z) < 1e-12);
        }
    }
}
