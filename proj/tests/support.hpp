#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "maxperiodic/surface.hpp"

namespace testing {

using maxperiodic::cplx;
namespace mp = maxperiodic;

// Complete elliptic integral of the first kind for parameter m = k^2, via the AGM.
inline double ellipticK(double m) {
    double a = 1, b = std::sqrt(1 - m);
    for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
        double t = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = t;
    }
    return M_PI / (2 * a);
}

// Imaginary part of the genus-one period from the cross ratio of the branch points.
inline double elliptic_tau(const std::vector<double>& e) {
    double m = (e[1] - e[0]) * (e[3] - e[2]) / ((e[3] - e[1]) * (e[2] - e[0]));
    return ellipticK(1 - m) / ellipticK(m);
}

// Branch points with 2n negatives and the last slit straddling 1, gaps at least `gap`.
inline std::vector<double> random_branch(std::mt19937& rng, int n, double gap = 0.15) {
    std::uniform_real_distribution<double> U(0, 1);
    for (;;) {
        std::vector<double> c;
        for (int k = 0; k < 2 * n; ++k) c.push_back(-0.1 - 3.9 * U(rng));
        std::sort(c.begin(), c.end());
        bool ok = true;
        for (size_t k = 1; k < c.size(); ++k) ok = ok && c[k] - c[k - 1] > gap;
        if (!ok) continue;
        c.push_back(0.1 + 0.75 * U(rng));
        c.push_back(1.2 + 2.5 * U(rng));
        return c;
    }
}

struct Pipeline {
    mp::curve::RealHyperellipticCurve curve;
    mp::homology::PeriodData pd;
    std::unique_ptr<mp::jacobian::AbelMap> abel;
    mp::jacobian::SpinorSystem sys;
    mp::jacobian::DivisorSolution sol;
    mp::weierstrass::WeierstrassData W;
};

// Reference surface: genus one, end at 0, section 1.
inline const Pipeline& reference() {
    static std::unique_ptr<Pipeline> P = [] {
        auto p = std::make_unique<Pipeline>();
        p->curve = mp::curve::RealHyperellipticCurve({-2, -1, 0.5, 2});
        p->pd = mp::homology::dual_basis_and_periods(p->curve, mp::homology::build_basis(p->curve));
        p->abel = std::make_unique<mp::jacobian::AbelMap>(p->curve, p->pd);
        p->sys = mp::jacobian::spinor_sections(*p->abel, 0.0);
        p->sol = mp::jacobian::solve_divisor(*p->abel, p->sys, 1, 0.0);
        p->W = mp::weierstrass::build(p->curve, p->pd, p->sol.divisor, 0.0, 1, {0, 0, 0});
        return p;
    }();
    return *P;
}

}  // namespace testing
