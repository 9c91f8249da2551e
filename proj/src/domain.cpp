#include "maxperiodic/domain.hpp"

#include <cmath>
#include <limits>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::domain {

double minkowski_inner(const MinkowskiVector& u, const MinkowskiVector& v) {
    return u.x1 * v.x1 + u.x2 * v.x2 - u.x3 * v.x3;
}

Causal classify(const MinkowskiVector& u, double tol) {
    double q = minkowski_inner(u, u);
    double scale = u.x1 * u.x1 + u.x2 * u.x2 + u.x3 * u.x3;
    if (scale == 0.0) return Causal::spacelike;
    if (std::abs(q) <= tol * scale) return Causal::lightlike;
    return q > 0 ? Causal::spacelike : Causal::timelike;
}

const char* causal_name(Causal c) {
    switch (c) {
        case Causal::spacelike: return "spacelike";
        case Causal::timelike: return "timelike";
        case Causal::lightlike: return "lightlike";
    }
    return "?";
}

MinkowskiVector lorentz_cross(const MinkowskiVector& u, const MinkowskiVector& v) {
    // Euclidean cross product with the third component negated.
    return {u.x2 * v.x3 - u.x3 * v.x2, u.x3 * v.x1 - u.x1 * v.x3, -(u.x1 * v.x2 - u.x2 * v.x1)};
}

bool is_infinite(cplx z) { return std::isinf(z.real()) || std::isinf(z.imag()); }

MinkowskiVector stereographic(cplx z) {
    if (is_infinite(z)) return {0, 0, 1};
    double r2 = std::norm(z);
    double d = r2 - 1.0;
    if (std::abs(d) < 1e-14) throw ValidationError("stereographic: |z| = 1 has no image on the hyperboloid");
    return {2 * z.imag() / d, -2 * z.real() / d, (r2 + 1) / d};
}

ValidityReport tn_validate(const CircularDomainParams& v, double eps) {
    auto fail = [](std::string s) { return ValidityReport{false, std::move(s)}; };
    if (v.n < 0) return fail("n must be nonnegative");
    if (!(v.c0 > 1.0)) return fail("c0 must exceed 1");
    if (static_cast<int>(v.centers.size()) != v.n) return fail("expected n centers");
    if (static_cast<int>(v.radii.size()) != v.n + 1) return fail("expected n+1 radii");
    for (double r : v.radii)
        if (!(r > 0)) return fail("radii must be positive");
    if (v.radii[0] != v.c0 - 1.0) return fail("r0 must equal c0 - 1");
    std::vector<cplx> c{cplx(v.c0, 0)};
    c.insert(c.end(), v.centers.begin(), v.centers.end());
    for (int i = 0; i <= v.n; ++i) {
        if (std::abs(c[i]) <= v.radii[i] + eps) return fail("0 lies in closed disk D" + std::to_string(i));
        for (int j = i + 1; j <= v.n; ++j)
            if (!(std::abs(c[i] - c[j]) > v.radii[i] + v.radii[j] + eps))
                return fail("disks D" + std::to_string(i) + " and D" + std::to_string(j) + " intersect");
    }
    return {};
}

cplx schwarz_reflect(const CircularDomainParams& v, cplx z) {
    cplx d = std::conj(z) - v.c0;
    if (std::abs(d) == 0.0) throw ValidationError("schwarz_reflect: pole at c0");
    return v.c0 + v.radii[0] * v.radii[0] / d;
}

}  // namespace maxperiodic::domain
