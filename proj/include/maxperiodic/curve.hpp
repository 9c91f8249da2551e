#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "maxperiodic/domain.hpp"
#include "maxperiodic/quadrature.hpp"

namespace maxperiodic::curve {

enum class Sheet : int { plus = 1, minus = -1 };
inline Sheet flip(Sheet s) { return s == Sheet::plus ? Sheet::minus : Sheet::plus; }
inline double sign(Sheet s) { return static_cast<double>(static_cast<int>(s)); }

// A point of the double.  Points over a slit carry `side` (+1 top edge, -1 bottom edge of the
// plus sheet); such points are stored on the plus sheet, since (x, +, top) == (x, -, bottom).
struct CurvePoint {
    cplx z{};
    Sheet sheet = Sheet::plus;
    bool infinite = false;
    int side = 0;

    static CurvePoint at(cplx z, Sheet s = Sheet::plus) { return {z, s, false, 0}; }
    static CurvePoint on_slit(double x, int side) { return {cplx(x, 0), Sheet::plus, false, side}; }
    static CurvePoint infinity(Sheet s) { return {cplx(0, 0), s, true, 0}; }
};

bool same_point(const CurvePoint& p, const CurvePoint& q, double tol = 1e-12);

struct Slit {
    double a, b;
    double mid() const { return 0.5 * (a + b); }
    double half() const { return 0.5 * (b - a); }
};

class RealHyperellipticCurve {
public:
    // Branch points c_1 < ... < c_{2n+2}; throws ValidationError when the ordering or sign
    // pattern is wrong or 1 is not inside the last slit.
    RealHyperellipticCurve() = default;
    explicit RealHyperellipticCurve(std::vector<double> branch);

    int genus() const { return n_; }
    const std::vector<double>& branch() const { return c_; }
    // Slit 0 is [c_{2n+1}, c_{2n+2}] (it contains the basepoint 1); slit j = [c_{2j-1}, c_{2j}].
    Slit slit(int i) const;
    int slit_count() const { return n_ + 1; }
    // Index of the slit containing real x, or -1 when x lies in a gap.
    int slit_containing(double x) const;
    bool on_slit(cplx z) const { return z.imag() == 0 && slit_containing(z.real()) >= 0; }
    int branch_index(cplx z, double tol = 0) const;
    double distance_to_slits(cplx z) const;
    double right_end() const { return c_.back(); }
    double left_end() const { return c_.front(); }

    // Principal branch; the sign of a zero imaginary part selects the side of a slit.
    cplx w_plus(cplx z) const;
    // Same, with the factor z - c_k replaced by an exactly known offset.
    cplx w_plus(cplx z, int k, cplx offset) const;
    cplx eval_w(cplx z, Sheet s) const;
    cplx eval_w(const CurvePoint& p) const;

private:
    int n_ = 0;
    std::vector<double> c_;
};

// Checked constructor returning a reason instead of throwing.
std::string validate_branch(const std::vector<double>& branch);

CurvePoint mirror_involution(const CurvePoint& p);
// The hyperelliptic involution (z, w) -> (z, -w).
CurvePoint hyperelliptic_involution(const CurvePoint& p);

enum class Symmetry { none, j_even, j_odd };
const char* symmetry_name(Symmetry s);

struct Pole {
    CurvePoint point;
    cplx residue;
};

// Form R(z, w) dz with a declared divisor.
class DifferentialForm {
public:
    using Coefficient = std::function<cplx(cplx, cplx)>;

    DifferentialForm() = default;
    DifferentialForm(std::string name, Coefficient r, Symmetry sym, std::vector<Pole> poles = {},
                     std::vector<std::pair<CurvePoint, int>> zeros = {})
        : name_(std::move(name)), r_(std::move(r)), sym_(sym), poles_(std::move(poles)), zeros_(std::move(zeros)) {}

    cplx operator()(cplx z, cplx w) const { return r_(z, w); }
    const std::string& name() const { return name_; }
    Symmetry symmetry() const { return sym_; }
    const std::vector<Pole>& poles() const { return poles_; }
    const std::vector<std::pair<CurvePoint, int>>& zeros() const { return zeros_; }
    const Coefficient& coefficient() const { return r_; }

private:
    std::string name_;
    Coefficient r_;
    Symmetry sym_ = Symmetry::none;
    std::vector<Pole> poles_;
    std::vector<std::pair<CurvePoint, int>> zeros_;
};

// Path pieces.  The quadrature parameter runs over [0,1] on every piece.
struct Segment {
    enum class Kind { line, arc, ray, joukowski };
    Kind kind = Kind::line;
    cplx a{}, b{};                         // line endpoints; ray start and unit direction
    cplx center{};                         // arc: center + rx cos t + i ry sin t
    double rx = 0, ry = 0, t0 = 0, t1 = 0; // arc and joukowski angles
    double mid = 0, half = 0, rho0 = 0, rho1 = 0;  // joukowski: z = mid + half (zeta + 1/zeta)/2, zeta = e^{rho + i t}
    Sheet sheet = Sheet::plus;
    int side = 0;                          // side of the cut for pieces running along the real axis
    quad::Ends ends = quad::Ends::none;

    static Segment line(cplx a, cplx b, Sheet s = Sheet::plus, quad::Ends e = quad::Ends::none, int side = 0);
    static Segment ray(cplx a, cplx dir, Sheet s = Sheet::plus);
    static Segment arc(cplx center, double rx, double ry, double t0, double t1, Sheet s = Sheet::plus);
    static Segment joukowski(const Slit& slit, double rho0, double rho1, double t0, double t1, Sheet s = Sheet::plus);

    cplx start() const;
    cplx finish() const;  // infinite for rays
    Segment reversed() const;
    Segment mirrored() const;  // image under J: conjugate geometry on the other sheet
};

using ContourPath = std::vector<Segment>;

ContourPath reversed(const ContourPath& p);
ContourPath mirrored(const ContourPath& p);

struct Sample {
    cplx z, w, dz;  // dz already includes the endpoint-map Jacobian
};

// Geometry of a piece at quadrature parameter s in (0,1).
Sample sample(const RealHyperellipticCurve& c, const Segment& seg, double s);

struct Integral {
    cplx value;
    double error;
};

// Integrates R(z,w) dz for any callable R returning cplx or Eigen::VectorXcd.
template <class R>
auto integrate(const RealHyperellipticCurve& c, const ContourPath& path, const R& r, const quad::Options& opt = {},
               double* err = nullptr) {
    using V = std::decay_t<decltype(r(cplx{}, cplx{}))>;
    V total{};
    bool first = true;
    double e = 0;
    quad::Options o = opt;
    if (!path.empty()) o.tol = opt.tol / static_cast<double>(path.size());
    for (const Segment& seg : path) {
        auto f = [&](double s) -> V {
            Sample q = sample(c, seg, s);
            return r(q.z, q.w) * q.dz;
        };
        V part = quad::adaptive(f, 0.0, 1.0, o, e);
        if (first) {
            total = part;
            first = false;
        } else {
            total += part;
        }
    }
    if (err) *err = e;
    return total;
}

Integral integrate_form(const RealHyperellipticCurve& c, const DifferentialForm& form, const ContourPath& path,
                        const quad::Options& opt = {});

// Collapsed counterclockwise loop around slit i: int_a^b [R(x - i0) - R(x + i0)] dx.
template <class R>
auto slit_loop_integral(const RealHyperellipticCurve& c, int i, const R& r, const quad::Options& opt = {}) {
    Slit s = c.slit(i);
    ContourPath p{Segment::line(s.a, s.b, Sheet::plus, quad::Ends::both, -1),
                  Segment::line(s.b, s.a, Sheet::plus, quad::Ends::both, +1)};
    return integrate(c, p, r, opt);
}

std::vector<DifferentialForm> holomorphic_basis_raw(const RealHyperellipticCurve& c);

// Elementary third-kind coefficient (w + w_p) / (2 (z - p) w): residue +1 at P, -1/2 at each
// point over infinity, regular at the hyperelliptic image of P.
cplx elementary_third_kind(cplx z, cplx w, cplx p, cplx wp);

DifferentialForm third_kind_pair(const RealHyperellipticCurve& c, const CurvePoint& P, const CurvePoint& Q);

// prod_{i<=n+1}(z - c_i) dz / ((z - e) w).
DifferentialForm reference_nu(const RealHyperellipticCurve& c, cplx e = 0.0);

// Residue from a small circle (or a large circle at infinity).
cplx residue(const RealHyperellipticCurve& c, const DifferentialForm::Coefficient& r, const CurvePoint& p,
             double radius = -1, const quad::Options& opt = {});

// Max deviation of the declared J-symmetry on random plus-sheet samples (relative).
double symmetry_defect(const RealHyperellipticCurve& c, const DifferentialForm& form, int samples = 100,
                       unsigned seed = 7);

// Path planning on the plane: a path from the basepoint (1 on the top edge of slit 0) to the
// target.  Plus-sheet paths stay in the slit complement and cross the real axis only to the
// right of every branch point; minus-sheet targets use the mirror image of the path to J(target).
// Obstacles (plus-sheet positions) steer the choice of travel height.
struct Planner {
    double height = 1.0;
    double crossing_gap = 1.0;
    std::vector<cplx> obstacles;
};

ContourPath path_from_base(const RealHyperellipticCurve& c, const CurvePoint& target, const Planner& pl = {});
double path_clearance(const ContourPath& p, const std::vector<cplx>& obstacles);
cplx basepoint();

}  // namespace maxperiodic::curve
