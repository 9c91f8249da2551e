#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "maxperiodic/homology.hpp"

namespace maxperiodic::jacobian {

using curve::CurvePoint;
using curve::RealHyperellipticCurve;
using homology::PeriodData;
using CVec = Eigen::VectorXcd;

struct Reduction {
    CVec residual;            // centered representative: real parts in [-1/2, 1/2)
    Eigen::VectorXi real_k;   // coefficients on the real generators e^j
    Eigen::VectorXi imag_k;   // coefficients on the columns of Pi
    double distance = 0;      // Euclidean size of the residual
};

struct JacobianPoint {
    CVec value;               // real parts in [0,1), imaginary parts reduced
    double residual = 0;
};

class JacobianLattice {
public:
    explicit JacobianLattice(const PeriodData& pd);
    int dim() const { return n_; }
    const Eigen::MatrixXcd& pi() const { return pi_; }
    // x = residual + sum real_k e + Pi imag_k with the residual as short as possible.
    Reduction reduce(const CVec& x) const;
    JacobianPoint point(const CVec& x) const;
    double distance(const CVec& x) const { return reduce(x).distance; }

private:
    int n_;
    Eigen::MatrixXcd pi_;
    Eigen::MatrixXd im_pi_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

// Divisor as a multiset of points with positive multiplicities.
struct Divisor {
    std::vector<std::pair<CurvePoint, int>> points;
    int degree() const;
    Divisor operator+(const Divisor& o) const;
    static Divisor of(const std::vector<CurvePoint>& pts);
};

Divisor mirror(const Divisor& d);
// Empty string when every point lies in the open plus sheet away from the slits.
std::string check_in_domain(const RealHyperellipticCurve& c, const Divisor& d, double margin = 0);

class AbelMap {
public:
    AbelMap(const RealHyperellipticCurve& c, const PeriodData& pd, quad::Options opt = {1e-12, 20, 40});
    // Unreduced integral of the eta vector from the basepoint along the planned path.
    CVec operator()(const CurvePoint& p, const curve::Planner& pl = {}) const;
    CVec operator()(const Divisor& d) const;
    CVec along(const curve::ContourPath& path) const;
    const JacobianLattice& lattice() const { return lattice_; }
    const RealHyperellipticCurve& curve() const { return c_; }
    const PeriodData& periods() const { return pd_; }

private:
    RealHyperellipticCurve c_;
    PeriodData pd_;
    JacobianLattice lattice_;
    quad::Options opt_;
};

JacobianPoint abel_map(const AbelMap& abel, const Divisor& d);
JacobianPoint mirror_on_jacobian(const JacobianLattice& L, const JacobianPoint& x);

struct CanonicalPoint {
    CVec T;            // from the divisor of dz/w
    CVec T_nu;         // from the divisor of nu
    double agreement;  // lattice distance between the two
};

CanonicalPoint canonical_point_T(const AbelMap& abel, cplx e = 0.0);

struct SpinorSection {
    int index;
    Eigen::VectorXi bits;  // offsets on (e^1..e^n, pi^1..pi^n)
    JacobianPoint E;
    double mirror_defect;  // lattice distance between I(E) and E
    double doubling_defect;
};

struct SpinorSystem {
    CVec target;  // T + phi(e) + phi(J e) + phi(inf+) + phi(inf-)
    CanonicalPoint T;
    std::vector<SpinorSection> sections;
};

SpinorSystem spinor_sections(const AbelMap& abel, cplx e = 0.0);

struct Membership {
    int best_section;
    double residual;         // lattice distance of 2 phi(D e) - target
    double section_distance; // lattice distance of phi(D e) - E_best
};

Membership spinor_membership(const AbelMap& abel, const SpinorSystem& sys, const Divisor& d, cplx e = 0.0);

struct SolveOptions {
    double tol = 1e-7;
    int grid = 41;
    int max_newton = 60;
    int multistart = 12;
    double margin = 1e-3;  // minimum distance of a solution from the slits
    std::vector<cplx> seed;  // tried first when given (continuation along parameter sweeps)
};

struct DivisorSolution {
    bool admissible = false;
    Divisor divisor;
    double residual = 0;
    double condition = 0;  // condition number of the eta-matrix at the solution
    std::string note;
};

DivisorSolution solve_divisor(const AbelMap& abel, const SpinorSystem& sys, int section, cplx e = 0.0,
                              const SolveOptions& opt = {});

}  // namespace maxperiodic::jacobian
