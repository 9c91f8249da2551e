#include "maxperiodic/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::jacobian {

using curve::Sheet;

JacobianLattice::JacobianLattice(const PeriodData& pd) : n_(pd.n), pi_(pd.Pi), im_pi_(pd.Pi.imag()), lu_(im_pi_) {}

Reduction JacobianLattice::reduce(const CVec& x) const {
    Eigen::VectorXd y = x.imag();
    Eigen::VectorXd k0 = lu_.solve(y);
    Eigen::VectorXi base(n_);
    for (int j = 0; j < n_; ++j) base[j] = static_cast<int>(std::lround(k0[j]));
    // local search over the 3^n neighbours of the rounded solution
    Eigen::VectorXi best = base;
    double best_norm = (y - im_pi_ * best.cast<double>()).norm();
    int combos = 1;
    for (int j = 0; j < n_; ++j) combos *= 3;
    for (int c = 0; c < combos; ++c) {
        Eigen::VectorXi k = base;
        int t = c;
        for (int j = 0; j < n_; ++j, t /= 3) k[j] += t % 3 - 1;
        double nrm = (y - im_pi_ * k.cast<double>()).norm();
        if (nrm < best_norm - 1e-15) {
            best_norm = nrm;
            best = k;
        }
    }
    Reduction r;
    r.imag_k = best;
    r.residual = x - pi_ * best.cast<cplx>();
    r.real_k.resize(n_);
    for (int j = 0; j < n_; ++j) {
        double m = std::floor(r.residual[j].real() + 0.5);
        r.real_k[j] = static_cast<int>(m);
        r.residual[j] -= m;
    }
    r.distance = r.residual.norm();
    return r;
}

JacobianPoint JacobianLattice::point(const CVec& x) const {
    Reduction r = reduce(x);
    JacobianPoint p{r.residual, r.distance};
    for (int j = 0; j < n_; ++j)
        if (p.value[j].real() < 0) p.value[j] += 1.0;
    return p;
}

int Divisor::degree() const {
    int d = 0;
    for (auto& [p, m] : points) d += m;
    return d;
}

Divisor Divisor::operator+(const Divisor& o) const {
    Divisor r = *this;
    for (auto& [p, m] : o.points) {
        bool merged = false;
        for (auto& [q, k] : r.points)
            if (curve::same_point(p, q, 1e-12)) {
                k += m;
                merged = true;
                break;
            }
        if (!merged) r.points.push_back({p, m});
    }
    return r;
}

Divisor Divisor::of(const std::vector<CurvePoint>& pts) {
    Divisor d;
    for (const CurvePoint& p : pts) d = d + Divisor{{{p, 1}}};
    return d;
}

Divisor mirror(const Divisor& d) {
    Divisor r;
    for (auto& [p, m] : d.points) r.points.push_back({curve::mirror_involution(p), m});
    return r;
}

std::string check_in_domain(const RealHyperellipticCurve& c, const Divisor& d, double margin) {
    for (auto& [p, m] : d.points) {
        if (m < 1) return "multiplicities must be positive";
        if (p.infinite) return "divisor point at infinity";
        if (p.sheet != Sheet::plus) return "divisor point on the minus sheet";
        if (p.side != 0 || c.on_slit(p.z)) return "divisor point on a slit";
        if (c.distance_to_slits(p.z) <= margin) return "divisor point too close to a slit";
    }
    return {};
}

AbelMap::AbelMap(const RealHyperellipticCurve& c, const PeriodData& pd, quad::Options opt)
    : c_(c), pd_(pd), lattice_(pd), opt_(opt) {}

CVec AbelMap::along(const curve::ContourPath& path) const {
    if (path.empty()) return CVec::Zero(pd_.n);
    return curve::integrate(c_, path, [this](cplx z, cplx w) { return pd_.eta(z, w); }, opt_);
}

CVec AbelMap::operator()(const CurvePoint& p, const curve::Planner& pl) const {
    return along(curve::path_from_base(c_, p, pl));
}

CVec AbelMap::operator()(const Divisor& d) const {
    CVec v = CVec::Zero(pd_.n);
    for (auto& [p, m] : d.points) v += static_cast<double>(m) * (*this)(p);
    return v;
}

JacobianPoint abel_map(const AbelMap& abel, const Divisor& d) { return abel.lattice().point(abel(d)); }

JacobianPoint mirror_on_jacobian(const JacobianLattice& L, const JacobianPoint& x) {
    return L.point(x.value.conjugate());
}

CanonicalPoint canonical_point_T(const AbelMap& abel, cplx e) {
    const RealHyperellipticCurve& c = abel.curve();
    int n = c.genus();
    CVec inf_p = abel(CurvePoint::infinity(Sheet::plus));
    CVec inf_m = abel(CurvePoint::infinity(Sheet::minus));
    CanonicalPoint out;
    out.T = static_cast<double>(n - 1) * (inf_p + inf_m);
    CVec branch = CVec::Zero(n);
    for (int i = 0; i <= n; ++i) branch += abel(CurvePoint::at(c.branch()[i]));
    out.T_nu = 2.0 * branch - abel(CurvePoint::at(e, Sheet::plus)) - abel(CurvePoint::at(e, Sheet::minus)) - inf_p -
               inf_m;
    out.agreement = abel.lattice().distance(out.T - out.T_nu);
    return out;
}

SpinorSystem spinor_sections(const AbelMap& abel, cplx e) {
    const JacobianLattice& L = abel.lattice();
    int n = L.dim();
    SpinorSystem sys;
    sys.T = canonical_point_T(abel, e);
    CurvePoint ep = CurvePoint::at(e, Sheet::plus);
    sys.target = sys.T.T + abel(ep) + abel(curve::mirror_involution(ep)) + abel(CurvePoint::infinity(Sheet::plus)) +
                 abel(CurvePoint::infinity(Sheet::minus));
    int count = 1 << (2 * n);
    for (int idx = 0; idx < count; ++idx) {
        SpinorSection s;
        s.index = idx;
        s.bits.resize(2 * n);
        for (int i = 0; i < 2 * n; ++i) s.bits[i] = (idx >> (2 * n - 1 - i)) & 1;
        CVec off = 0.5 * (s.bits.head(n).cast<cplx>() + L.pi() * s.bits.tail(n).cast<cplx>());
        s.E = L.point(0.5 * sys.target + off);
        s.mirror_defect = L.distance(s.E.value.conjugate() - s.E.value);
        s.doubling_defect = L.distance(2.0 * s.E.value - sys.target);
        sys.sections.push_back(s);
    }
    return sys;
}

Membership spinor_membership(const AbelMap& abel, const SpinorSystem& sys, const Divisor& d, cplx e) {
    if (d.degree() != abel.lattice().dim()) throw ValidationError("spinor_membership: divisor degree must equal n");
    CVec v = abel(d) + abel(CurvePoint::at(e, Sheet::plus));
    Membership m{-1, abel.lattice().distance(2.0 * v - sys.target), 1e300};
    for (const SpinorSection& s : sys.sections) {
        double dist = abel.lattice().distance(v - s.E.value);
        if (dist < m.section_distance) {
            m.section_distance = dist;
            m.best_section = s.index;
        }
    }
    return m;
}

namespace {

struct Candidate {
    std::vector<cplx> z;
    double res;
};

}  // namespace

DivisorSolution solve_divisor(const AbelMap& abel, const SpinorSystem& sys, int section, cplx e,
                              const SolveOptions& opt) {
    const RealHyperellipticCurve& c = abel.curve();
    const JacobianLattice& L = abel.lattice();
    const PeriodData& pd = abel.periods();
    int n = c.genus();
    if (section < 0 || section >= static_cast<int>(sys.sections.size()))
        throw ValidationError("solve_divisor: section index out of range");
    const CVec E = sys.sections[section].E.value;
    const CVec phi_e = abel(CurvePoint::at(e, Sheet::plus));

    auto residual = [&](const std::vector<cplx>& z) {
        CVec v = phi_e - E;
        for (cplx zk : z) v += abel(CurvePoint::at(zk));
        return L.reduce(v).residual;
    };

    // seeds from a grid of single points
    double x0 = c.left_end() - 1, x1 = c.right_end() + 1;
    double Y = std::max(1.0, 0.5 * (x1 - x0));
    int gx = opt.grid, gy = std::max(5, opt.grid / 2);
    std::vector<cplx> grid;
    std::vector<CVec> phis;
    for (int i = 0; i < gx; ++i)
        for (int k = 0; k < gy; ++k) {
            // a small irrational shift keeps grid nodes off the real axis and off e
            cplx z(x0 + (x1 - x0) * (i + 0.5) / gx, -Y + 2 * Y * (k + 0.5 + 0.0137) / gy);
            if (c.distance_to_slits(z) < 10 * opt.margin) continue;
            grid.push_back(z);
            phis.push_back(abel(CurvePoint::at(z)));
        }
    std::vector<Candidate> cands;
    if (static_cast<int>(opt.seed.size()) == n) cands.push_back({opt.seed, -1.0});
    if (n == 1) {
        for (size_t i = 0; i < grid.size(); ++i)
            cands.push_back({{grid[i]}, L.distance(phis[i] + phi_e - E)});
    } else {
        std::mt19937 rng(12345u + section);
        std::uniform_int_distribution<size_t> pick(0, grid.size() - 1);
        for (int t = 0; t < 6000; ++t) {
            std::vector<size_t> idx(n);
            CVec v = phi_e - E;
            for (int k = 0; k < n; ++k) {
                idx[k] = pick(rng);
                v += phis[idx[k]];
            }
            Candidate cd;
            for (size_t i : idx) cd.z.push_back(grid[i]);
            cd.res = L.distance(v);
            cands.push_back(cd);
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.res < b.res; });
    if (static_cast<int>(cands.size()) > opt.multistart) cands.resize(opt.multistart);

    DivisorSolution best;
    best.residual = 1e300;
    const double step_cap = 0.25 * (c.right_end() - c.left_end());
    for (const Candidate& cd : cands) {
        std::vector<cplx> z = cd.z;
        CVec F = residual(z);
        for (int it = 0; it < opt.max_newton && F.norm() > 1e-14; ++it) {
            Eigen::MatrixXcd M(n, n);
            for (int k = 0; k < n; ++k) M.col(k) = pd.eta(z[k], c.w_plus(z[k]));
            CVec d = M.fullPivLu().solve(-F);
            double len = d.cwiseAbs().maxCoeff();
            if (len > step_cap) d *= step_cap / len;
            double lam = 1.0;
            bool moved = false;
            for (int h = 0; h < 30; ++h, lam *= 0.5) {
                std::vector<cplx> t = z;
                bool ok = true;
                for (int k = 0; k < n; ++k) {
                    t[k] += lam * d[k];
                    if (c.distance_to_slits(t[k]) < 1e-12) ok = false;
                }
                if (!ok) continue;
                CVec Ft = residual(t);
                if (Ft.norm() < F.norm()) {
                    z = t;
                    F = Ft;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        double res = F.norm();
        bool inside = true;
        for (cplx zk : z)
            if (c.distance_to_slits(zk) < opt.margin) inside = false;
        bool better = (inside && !best.admissible) || ((inside == best.admissible) && res < best.residual);
        if (better) {
            Eigen::MatrixXcd M(n, n);
            for (int k = 0; k < n; ++k) M.col(k) = pd.eta(z[k], c.w_plus(z[k]));
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
            auto s = svd.singularValues();
            best.condition = s[0] / std::max(s[s.size() - 1], 1e-300);
            best.residual = res;
            best.divisor = Divisor{};
            for (cplx zk : z) best.divisor = best.divisor + Divisor{{{CurvePoint::at(zk), 1}}};
            best.admissible = inside && res < opt.tol;
        }
        if (best.admissible && best.residual < 1e-12) break;
    }
    if (!best.admissible)
        best.note = best.residual < opt.tol ? "solution touches a slit" : "no solution in the plus sheet";
    // membership of the divisor as actually returned
    if (best.admissible) best.residual = spinor_membership(abel, sys, best.divisor, e).residual;
    return best;
}

}  // namespace maxperiodic::jacobian
