#pragma once

#include <complex>
#include <string>
#include <vector>

namespace maxperiodic {

using cplx = std::complex<double>;

namespace domain {

enum class Causal { spacelike, timelike, lightlike };

struct MinkowskiVector {
    double x1 = 0, x2 = 0, x3 = 0;

    MinkowskiVector operator+(const MinkowskiVector& o) const { return {x1 + o.x1, x2 + o.x2, x3 + o.x3}; }
    MinkowskiVector operator-(const MinkowskiVector& o) const { return {x1 - o.x1, x2 - o.x2, x3 - o.x3}; }
    MinkowskiVector operator*(double s) const { return {s * x1, s * x2, s * x3}; }
    double operator[](int i) const { return i == 0 ? x1 : (i == 1 ? x2 : x3); }
};

double minkowski_inner(const MinkowskiVector& u, const MinkowskiVector& v);

// The zero vector counts as spacelike.  `tol` is relative to the Euclidean size.
Causal classify(const MinkowskiVector& u, double tol = 0.0);
const char* causal_name(Causal c);

// Lorentzian cross product: <u x v, w> = det(u, v, w).
MinkowskiVector lorentz_cross(const MinkowskiVector& u, const MinkowskiVector& v);

// Stereographic projection onto the two-sheeted hyperboloid.  Pass
// std::numeric_limits<double>::infinity() (in the real part) for the point at infinity.
MinkowskiVector stereographic(cplx z);
bool is_infinite(cplx z);

struct CircularDomainParams {
    int n = 0;
    double c0 = 2.0;
    std::vector<cplx> centers;  // c_1..c_n
    std::vector<double> radii;  // r_0..r_n
};

struct ValidityReport {
    bool valid = true;
    std::string violation;
};

ValidityReport tn_validate(const CircularDomainParams& v, double eps_geom = 1e-12);

cplx schwarz_reflect(const CircularDomainParams& v, cplx z);

}  // namespace domain
}  // namespace maxperiodic
