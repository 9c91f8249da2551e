#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "maxperiodic/domain.hpp"
#include "maxperiodic/jacobian.hpp"

namespace maxperiodic::weierstrass {

using curve::CurvePoint;
using curve::RealHyperellipticCurve;
using curve::Sheet;
using homology::PeriodData;
using jacobian::Divisor;
using CVec = Eigen::VectorXcd;

struct PoleTerm {
    CurvePoint point;
    double residue;
    cplx wp;  // w at the pole (finite poles only)
};

// Sum of residue-weighted elementary third-kind terms, a multiple of z^n dz/w fixing the residues at
// the points over infinity, and a holomorphic part sum_k hol[k] z^k dz/w.
class ThirdKind {
public:
    ThirdKind() = default;
    ThirdKind(const RealHyperellipticCurve& c, const std::vector<std::pair<CurvePoint, double>>& poles);

    cplx operator()(cplx z, cplx w) const;
    const std::vector<PoleTerm>& finite() const { return finite_; }
    double residue_inf(Sheet s) const { return s == Sheet::plus ? inf_plus_ : inf_minus_; }
    std::vector<curve::Pole> residue_table() const;
    CVec& hol() { return hol_; }
    const CVec& hol() const { return hol_; }
    curve::DifferentialForm form(const std::string& name, curve::Symmetry sym = curve::Symmetry::none) const;
    // Finite pole positions on one sheet.
    std::vector<cplx> poles_on(Sheet s) const;

private:
    int n_ = 0;
    std::vector<PoleTerm> finite_;
    double inf_plus_ = 0, inf_minus_ = 0;
    cplx sigma_ = 0;
    CVec hol_;
};

struct NormalizedThirdKind {
    ThirdKind form;
    CVec a_periods;       // after normalization, from collapsed slit integrals
    double a_certificate; // max |a-period|
};

// Subtracts the dual-basis combination that kills the a-periods.
NormalizedThirdKind normalize(const RealHyperellipticCurve& c, const PeriodData& pd, ThirdKind t,
                              const quad::Options& opt = {1e-12, 20, 40});

// Residue -m at each w_j and +m at J(w_j), zero a-periods.
NormalizedThirdKind tau_form(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D);
// Residue -m at w_{j,1} and J(w_{j,1}); +n at w_{h,2} and J(w_{h,2}).
NormalizedThirdKind kappa_form(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D1,
                               const Divisor& D2);

// b-period of a meromorphic form along b_j with the arc shape chosen to keep away from poles.
cplx b_period(const RealHyperellipticCurve& c, const ThirdKind& t, int j, const quad::Options& opt = {1e-12, 20, 40});

class PrincipalFunction {
public:
    PrincipalFunction() = default;
    PrincipalFunction(RealHyperellipticCurve c, ThirdKind exponent, Divisor num, Divisor den);

    // Log of the function: integral of the exponent form from the basepoint.
    cplx log_value(const CurvePoint& p) const;
    cplx operator()(const CurvePoint& p) const { return std::exp(log_value(p)); }
    cplx dlog(cplx z, cplx w) const { return exponent_(z, w); }
    const ThirdKind& exponent() const { return exponent_; }
    std::vector<cplx> obstacles(Sheet s) const;

    Eigen::VectorXi m;     // coefficients of 2 pi i eta_j in the exponent form
    Eigen::VectorXi l;     // real-lattice integers of the reduction
    double residual = 0;   // lattice distance of the b-period vector
    CVec b_raw;            // b-periods of the normalized third-kind part
    Divisor numerator, denominator;
    quad::Options opt{1e-12, 20, 40};

private:
    RealHyperellipticCurve c_;
    ThirdKind exponent_;
};

// Function with divisor numerator/denominator, value 1 at the basepoint.  Throws ObstructionError
// (carrying the lattice distance) when the divisor is not principal within `tol`.
PrincipalFunction principal_function(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& numerator,
                                     const Divisor& denominator, double tol = 1e-7);

PrincipalFunction build_g0(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e = 0.0,
                           double tol = 1e-7);

struct ReferenceForm {
    Eigen::VectorXd lambda;   // real weights on eta_j
    CVec poly;                // omega_0 = sum_k poly[k] z^k dz / w
    std::vector<cplx> zeros;  // roots of the polynomial (each gives a zero on both sheets)
    int attempts = 0;
};

ReferenceForm reference_form(const RealHyperellipticCurve& c, const PeriodData& pd, cplx e = 0.0,
                             const Divisor& avoid = {}, double margin = 1e-4);

struct Phi3 {
    PrincipalFunction f;  // divisor D J(D) / (inf+ inf- (omega_0))
    ReferenceForm ref;
    cplx kappa;           // unimodular constant
};

Phi3 build_phi30(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e = 0.0,
                 double tol = 1e-7);

struct ChiNormalization {
    domain::MinkowskiVector V0;  // Re of the unscaled period around e
    cplx wx;
    cplx theta;
    double r;
    int flux_sign;               // sign of the third flux component of the unscaled data on a_0
};

struct Certificates {
    double abel_g = 0, abel_f = 0;
    double a_period_g = 0, a_period_f = 0;
    double g_modulus_on_slits = 0;  // max | |g| - 1 |
    double g_mirror = 0;            // max |g(JP) conj(g(P)) - 1|
    double phi3_antisymmetry = 0;
    double conformality = 0;
    int degree_winding = 0;
    double fitted_r = 1;            // real scale r with g o J = r / conj(g)
};

class WeierstrassData {
public:
    RealHyperellipticCurve curve;
    PeriodData periods;
    cplx e = 0;
    Divisor D;
    PrincipalFunction g0;
    Phi3 phi3;
    cplx theta = 1;
    double r = 1;
    int eps0 = 1;
    domain::MinkowskiVector q0;
    ChiNormalization chi{};
    Certificates cert;

    cplx ref_poly(cplx z) const;
    cplx g_of_log(cplx lg) const { return theta * std::exp(lg); }
    cplx phi3_coef(cplx z, cplx w, cplx lf) const { return r * phi3.kappa * std::exp(lf) * ref_poly(z) / w; }
    Eigen::Vector3cd Phi_coef(cplx z, cplx w, cplx lg, cplx lf) const;

    cplx g(const CurvePoint& p) const;
    cplx g_infinity() const;
    cplx phi3_at(const CurvePoint& p) const;  // coefficient of dz
    Eigen::Vector3cd Phi_at(const CurvePoint& p) const;
    // Plus- and minus-sheet obstacles for path planning: e, divisor points, zeros of omega_0.
    std::vector<cplx> obstacles(Sheet s) const;
};

struct TrackState {
    cplx lg = 0, lf = 0;
    Eigen::Vector3cd I = Eigen::Vector3cd::Zero();
};

// Integrates log g, log f and the vector of Phi jointly along paths.
class Tracker {
public:
    explicit Tracker(const WeierstrassData& W, double tol = 1e-11, int order = 16);
    TrackState advance(const TrackState& s, const curve::Segment& seg) const;
    // Advance over the parameter range [lo, hi] of the piece.
    TrackState advance(const TrackState& s, const curve::Segment& seg, double lo, double hi) const {
        return go(s, seg, lo, hi, 0);
    }
    TrackState along(TrackState s, const curve::ContourPath& p) const;
    TrackState from_base(const CurvePoint& target) const;
    curve::ContourPath plan(const CurvePoint& target) const;
    const WeierstrassData& data() const { return W_; }

private:
    TrackState panel(const TrackState& s, const curve::Segment& seg, double lo, double hi) const;
    TrackState go(const TrackState& s, const curve::Segment& seg, double lo, double hi, int depth) const;
    const WeierstrassData& W_;
    double tol_;
    int order_;
};

// Integral of Phi around a closed cycle starting at its first point (reached from the basepoint).
Eigen::Vector3cd cycle_integral(const Tracker& T, const curve::ContourPath& cycle);
curve::ContourPath e_loop(const WeierstrassData& W, double radius = -1);
// Loop around slit i on the plus sheet, well inside the nearest obstacle.
curve::ContourPath a_loop(const WeierstrassData& W, int i);

struct FluxVector {
    domain::MinkowskiVector v;
    std::string cycle;
    domain::Causal causal;
};

FluxVector flux(const Tracker& T, const curve::ContourPath& cycle, const std::string& name);

// Sets theta, r from the unscaled data (theta = 1, r = 1 on entry).
ChiNormalization normalize_chi(WeierstrassData& W, int eps0, const domain::MinkowskiVector& q0);

struct BuildOptions {
    double abel_tol = 1e-7;
    double track_tol = 1e-11;
    int certificate_samples = 1000;
};

// Full construction: g0, phi3, normalization and certificates.
WeierstrassData build(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e, int eps0,
                      const domain::MinkowskiVector& q0, const BuildOptions& opt = {});

void certify(WeierstrassData& W, int samples = 1000);

}  // namespace maxperiodic::weierstrass
