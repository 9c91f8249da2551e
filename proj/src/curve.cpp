#include "maxperiodic/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::curve {

bool same_point(const CurvePoint& p, const CurvePoint& q, double tol) {
    if (p.infinite || q.infinite) return p.infinite && q.infinite && p.sheet == q.sheet;
    if (std::abs(p.z - q.z) > tol) return false;
    if (p.side != 0 || q.side != 0) return p.side == q.side;
    return p.sheet == q.sheet;
}

std::string validate_branch(const std::vector<double>& c) {
    if (c.size() < 4 || c.size() % 2) return "need an even number (>= 4) of branch points";
    for (double x : c)
        if (!std::isfinite(x)) return "branch points must be finite";
    for (size_t i = 1; i < c.size(); ++i)
        if (!(c[i] > c[i - 1])) return "branch points must be strictly increasing";
    size_t neg = std::count_if(c.begin(), c.end(), [](double x) { return x < 0; });
    if (neg != c.size() - 2) return "exactly 2n branch points must be negative";
    if (!(c[c.size() - 2] < 1.0 && 1.0 < c.back())) return "the basepoint 1 must lie inside the last slit";
    return {};
}

RealHyperellipticCurve::RealHyperellipticCurve(std::vector<double> branch) : c_(std::move(branch)) {
    std::string why = validate_branch(c_);
    if (!why.empty()) throw ValidationError(why);
    n_ = static_cast<int>(c_.size()) / 2 - 1;
}

Slit RealHyperellipticCurve::slit(int i) const {
    if (i == 0) return {c_[2 * n_], c_[2 * n_ + 1]};
    return {c_[2 * i - 2], c_[2 * i - 1]};
}

int RealHyperellipticCurve::slit_containing(double x) const {
    for (int i = 0; i <= n_; ++i) {
        Slit s = slit(i);
        if (x >= s.a && x <= s.b) return i;
    }
    return -1;
}

int RealHyperellipticCurve::branch_index(cplx z, double tol) const {
    if (std::abs(z.imag()) > tol) return -1;
    for (size_t i = 0; i < c_.size(); ++i)
        if (std::abs(z.real() - c_[i]) <= tol) return static_cast<int>(i);
    return -1;
}

double RealHyperellipticCurve::distance_to_slits(cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_; ++i) {
        Slit s = slit(i);
        double x = std::clamp(z.real(), s.a, s.b);
        d = std::min(d, std::abs(z - cplx(x, 0)));
    }
    return d;
}

cplx RealHyperellipticCurve::w_plus(cplx z) const {
    cplx r(1, 0);
    for (double c : c_) r *= std::sqrt(z - c);
    return r;
}

cplx RealHyperellipticCurve::w_plus(cplx z, int k, cplx offset) const {
    cplx r(1, 0);
    for (int i = 0; i < static_cast<int>(c_.size()); ++i) r *= std::sqrt(i == k ? offset : z - c_[i]);
    return r;
}

cplx RealHyperellipticCurve::eval_w(cplx z, Sheet s) const { return sign(s) * w_plus(z); }

cplx RealHyperellipticCurve::eval_w(const CurvePoint& p) const {
    if (p.infinite) return cplx(std::numeric_limits<double>::infinity(), 0);
    cplx z = p.z;
    if (z.imag() == 0 && slit_containing(z.real()) >= 0 && branch_index(z) < 0) {
        if (p.side == 0) throw ValidationError("eval_w: point on a slit needs a side");
        z = cplx(z.real(), std::copysign(0.0, static_cast<double>(p.side)));
    }
    return eval_w(z, p.sheet);
}

CurvePoint mirror_involution(const CurvePoint& p) {
    if (p.infinite) return CurvePoint::infinity(flip(p.sheet));
    if (p.side != 0) return p;
    return CurvePoint::at(std::conj(p.z), flip(p.sheet));
}

CurvePoint hyperelliptic_involution(const CurvePoint& p) {
    if (p.infinite) return CurvePoint::infinity(flip(p.sheet));
    if (p.side != 0) return CurvePoint::on_slit(p.z.real(), -p.side);
    return CurvePoint::at(p.z, flip(p.sheet));
}

const char* symmetry_name(Symmetry s) {
    switch (s) {
        case Symmetry::j_even: return "J-even";
        case Symmetry::j_odd: return "J-odd";
        default: return "none";
    }
}

Segment Segment::line(cplx a, cplx b, Sheet s, quad::Ends e, int side) {
    Segment g;
    g.kind = Kind::line;
    g.a = a;
    g.b = b;
    g.sheet = s;
    g.ends = e;
    g.side = side;
    return g;
}

Segment Segment::ray(cplx a, cplx dir, Sheet s) {
    Segment g;
    g.kind = Kind::ray;
    g.a = a;
    g.b = dir / std::abs(dir);
    g.sheet = s;
    return g;
}

Segment Segment::arc(cplx center, double rx, double ry, double t0, double t1, Sheet s) {
    Segment g;
    g.kind = Kind::arc;
    g.center = center;
    g.rx = rx;
    g.ry = ry;
    g.t0 = t0;
    g.t1 = t1;
    g.sheet = s;
    return g;
}

Segment Segment::joukowski(const Slit& slit, double rho0, double rho1, double t0, double t1, Sheet s) {
    Segment g;
    g.kind = Kind::joukowski;
    g.mid = slit.mid();
    g.half = slit.half();
    g.rho0 = rho0;
    g.rho1 = rho1;
    g.t0 = t0;
    g.t1 = t1;
    g.sheet = s;
    return g;
}

namespace {

cplx jouk(double mid, double half, double rho, double t) {
    cplx zeta = std::exp(cplx(rho, t));
    return mid + 0.5 * half * (zeta + 1.0 / zeta);
}

}  // namespace

cplx Segment::start() const {
    switch (kind) {
        case Kind::line:
        case Kind::ray: return a;
        case Kind::arc: return center + cplx(rx * std::cos(t0), ry * std::sin(t0));
        case Kind::joukowski: return jouk(mid, half, rho0, t0);
    }
    return a;
}

cplx Segment::finish() const {
    switch (kind) {
        case Kind::line: return b;
        case Kind::ray: return cplx(std::numeric_limits<double>::infinity(), 0);
        case Kind::arc: return center + cplx(rx * std::cos(t1), ry * std::sin(t1));
        case Kind::joukowski: return jouk(mid, half, rho1, t1);
    }
    return b;
}

Segment Segment::reversed() const {
    Segment g = *this;
    switch (kind) {
        case Kind::line: std::swap(g.a, g.b); break;
        case Kind::ray: throw std::logic_error("a ray cannot be reversed");
        case Kind::arc: std::swap(g.t0, g.t1); break;
        case Kind::joukowski:
            std::swap(g.t0, g.t1);
            std::swap(g.rho0, g.rho1);
            break;
    }
    if (ends == quad::Ends::start) g.ends = quad::Ends::end;
    if (ends == quad::Ends::end) g.ends = quad::Ends::start;
    return g;
}

Segment Segment::mirrored() const {
    Segment g = *this;
    g.sheet = flip(sheet);
    g.side = -side;
    switch (kind) {
        case Kind::line:
        case Kind::ray:
            g.a = std::conj(a);
            g.b = std::conj(b);
            break;
        case Kind::arc:
            g.center = std::conj(center);
            g.ry = -ry;
            break;
        case Kind::joukowski:
            g.t0 = -t0;
            g.t1 = -t1;
            break;
    }
    return g;
}

ContourPath reversed(const ContourPath& p) {
    ContourPath r;
    for (auto it = p.rbegin(); it != p.rend(); ++it) r.push_back(it->reversed());
    return r;
}

ContourPath mirrored(const ContourPath& p) {
    ContourPath r;
    for (const Segment& s : p) r.push_back(s.mirrored());
    return r;
}

Sample sample(const RealHyperellipticCurve& c, const Segment& seg, double s) {
    double t = s, dt = 1, rest = 1 - s;
    quad::endpoint_map(seg.ends, s, t, dt, rest);
    cplx z, dz;
    int side = seg.side;
    switch (seg.kind) {
        case Segment::Kind::line:
            z = seg.a + (seg.b - seg.a) * t;
            dz = (seg.b - seg.a) * dt;
            break;
        case Segment::Kind::ray: {
            double u = t / (1 - t);
            z = seg.a + seg.b * u;
            dz = seg.b * (dt / ((1 - t) * (1 - t)));
            break;
        }
        case Segment::Kind::arc: {
            double th = seg.t0 + (seg.t1 - seg.t0) * t;
            z = seg.center + cplx(seg.rx * std::cos(th), seg.ry * std::sin(th));
            dz = cplx(-seg.rx * std::sin(th), seg.ry * std::cos(th)) * ((seg.t1 - seg.t0) * dt);
            break;
        }
        case Segment::Kind::joukowski: {
            double rho = seg.rho0 + (seg.rho1 - seg.rho0) * t;
            double th = seg.t0 + (seg.t1 - seg.t0) * t;
            cplx zeta = std::exp(cplx(rho, th));
            z = seg.mid + 0.5 * seg.half * (zeta + 1.0 / zeta);
            dz = 0.5 * seg.half * (zeta - 1.0 / zeta) * cplx(seg.rho1 - seg.rho0, seg.t1 - seg.t0) * dt;
            if (rho == 0.0) {
                z = cplx(z.real(), 0.0);
                side = std::sin(th) >= 0 ? 1 : -1;
            }
            break;
        }
    }
    if (z.imag() == 0 && side != 0) z = cplx(z.real(), std::copysign(0.0, static_cast<double>(side)));
    // Close to a branch-point end the rounded z loses the offset z - c; use the exact one.
    if (seg.kind == Segment::Kind::line && seg.ends != quad::Ends::none) {
        bool at_start = seg.ends != quad::Ends::end && t < 0.5;
        bool at_end = seg.ends != quad::Ends::start && t >= 0.5;
        cplx end = at_start ? seg.a : seg.b;
        int k = (at_start || at_end) ? c.branch_index(end) : -1;
        if (k >= 0) {
            cplx off = at_start ? (seg.b - seg.a) * t : (seg.a - seg.b) * rest;
            if (off.imag() == 0) off = cplx(off.real(), std::copysign(0.0, z.imag()));
            return {z, sign(seg.sheet) * c.w_plus(z, k, off), dz};
        }
    }
    return {z, c.eval_w(z, seg.sheet), dz};
}

Integral integrate_form(const RealHyperellipticCurve& c, const DifferentialForm& form, const ContourPath& path,
                        const quad::Options& opt) {
    double err = 0;
    cplx v = integrate(c, path, [&](cplx z, cplx w) { return form(z, w); }, opt, &err);
    return {v, err};
}

std::vector<DifferentialForm> holomorphic_basis_raw(const RealHyperellipticCurve& c) {
    std::vector<DifferentialForm> out;
    for (int k = 0; k < c.genus(); ++k) {
        std::string name = k == 0 ? "dz/w" : (k == 1 ? "z dz/w" : "z^" + std::to_string(k) + " dz/w");
        out.emplace_back(name, [k](cplx z, cplx w) { return std::pow(z, k) / w; }, Symmetry::j_odd);
    }
    return out;
}

cplx elementary_third_kind(cplx z, cplx w, cplx p, cplx wp) { return 0.5 * (w + wp) / ((z - p) * w); }

DifferentialForm third_kind_pair(const RealHyperellipticCurve& c, const CurvePoint& P, const CurvePoint& Q) {
    if (P.infinite || Q.infinite) throw ValidationError("third_kind_pair: poles must be finite");
    if (c.branch_index(P.z, 1e-14) >= 0 || c.branch_index(Q.z, 1e-14) >= 0)
        throw ValidationError("third_kind_pair: pole at a branch point");
    if (same_point(P, Q)) throw ValidationError("third_kind_pair: coincident poles");
    cplx p = P.z, q = Q.z, wp = c.eval_w(P), wq = c.eval_w(Q);
    return DifferentialForm(
        "third-kind pair",
        [=](cplx z, cplx w) { return elementary_third_kind(z, w, p, wp) - elementary_third_kind(z, w, q, wq); },
        Symmetry::none, {{P, 1.0}, {Q, -1.0}});
}

DifferentialForm reference_nu(const RealHyperellipticCurve& c, cplx e) {
    int n = c.genus();
    std::vector<double> roots(c.branch().begin(), c.branch().begin() + n + 1);
    cplx num(1, 0);
    for (double r : roots) num *= e - r;
    cplx res = num / c.w_plus(e);
    std::vector<Pole> poles{{CurvePoint::at(e, Sheet::plus), res},
                            {CurvePoint::at(e, Sheet::minus), -res},
                            {CurvePoint::infinity(Sheet::plus), -1.0},
                            {CurvePoint::infinity(Sheet::minus), 1.0}};
    std::vector<std::pair<CurvePoint, int>> zeros;
    for (double r : roots) zeros.push_back({CurvePoint::at(r), 2});
    Symmetry sym = e.imag() == 0 ? Symmetry::j_odd : Symmetry::none;
    return DifferentialForm(
        "nu",
        [roots, e](cplx z, cplx w) {
            cplx p(1, 0);
            for (double r : roots) p *= z - r;
            return p / ((z - e) * w);
        },
        sym, poles, zeros);
}

cplx residue(const RealHyperellipticCurve& c, const DifferentialForm::Coefficient& r, const CurvePoint& p, double radius,
             const quad::Options& opt) {
    const cplx two_pi_i(0, 2 * M_PI);
    if (p.infinite) {
        double R = radius > 0 ? radius : 2 * (std::max(std::abs(c.left_end()), std::abs(c.right_end())) + 1);
        ContourPath loop{Segment::arc(0.0, R, R, 0, 2 * M_PI, p.sheet)};
        return -integrate(c, loop, r, opt) / two_pi_i;
    }
    if (p.side != 0 || c.on_slit(p.z)) throw ValidationError("residue: point on a slit");
    double rad = radius > 0 ? radius : std::min(0.1, 0.3 * c.distance_to_slits(p.z));
    ContourPath loop{Segment::arc(p.z, rad, rad, 0, 2 * M_PI, p.sheet)};
    return integrate(c, loop, r, opt) / two_pi_i;
}

double symmetry_defect(const RealHyperellipticCurve& c, const DifferentialForm& form, int samples, unsigned seed) {
    if (form.symmetry() == Symmetry::none) return 0.0;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(c.left_end() - 1, c.right_end() + 1), uy(-2, 2);
    double worst = 0;
    int done = 0;
    while (done < samples) {
        cplx z(ux(rng), uy(rng));
        if (c.distance_to_slits(z) < 1e-2) continue;
        bool near_pole = false;
        for (const Pole& p : form.poles())
            if (!p.point.infinite && std::min(std::abs(z - p.point.z), std::abs(std::conj(z) - p.point.z)) < 1e-2)
                near_pole = true;
        if (near_pole) continue;
        cplx w = c.w_plus(z);
        cplx lhs = form(std::conj(z), -std::conj(w));
        cplx rhs = std::conj(form(z, w));
        double d = form.symmetry() == Symmetry::j_even ? std::abs(lhs - rhs) : std::abs(lhs + rhs);
        worst = std::max(worst, d / std::max(std::abs(rhs), 1e-300));
        ++done;
    }
    return worst;
}

cplx basepoint() { return cplx(1, 0); }

namespace {

double point_segment_distance(cplx p, cplx a, cplx b) {
    cplx d = b - a;
    double L2 = std::norm(d);
    if (L2 == 0) return std::abs(p - a);
    double t = std::clamp(((p - a) * std::conj(d)).real() / L2, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

ContourPath plan(const RealHyperellipticCurve& c, const CurvePoint& t, double H, double X) {
    const cplx base = basepoint();
    ContourPath p;
    auto add = [&](cplx a, cplx b, quad::Ends e = quad::Ends::none) {
        if (std::abs(b - a) > 0) p.push_back(Segment::line(a, b, Sheet::plus, e));
    };
    cplx up(1, H);
    add(base, up);
    if (t.infinite) {
        p.push_back(Segment::ray(up, cplx(0, 1)));
        return p;
    }
    cplx z = t.z;
    bool lower = t.side < 0 || (t.side == 0 && z.imag() < 0);
    quad::Ends last = c.branch_index(z) >= 0 ? quad::Ends::end : quad::Ends::none;
    if (!lower) {
        add(up, cplx(z.real(), H));
        add(cplx(z.real(), H), z, last);
    } else {
        add(up, cplx(X, H));
        add(cplx(X, H), cplx(X, -H));
        add(cplx(X, -H), cplx(z.real(), -H));
        add(cplx(z.real(), -H), z, last);
    }
    if (t.side != 0 && !p.empty()) p.back().side = t.side;
    return p;
}

}  // namespace

double path_clearance(const ContourPath& p, const std::vector<cplx>& obstacles) {
    double d = std::numeric_limits<double>::infinity();
    for (const Segment& s : p)
        for (cplx q : obstacles) {
            switch (s.kind) {
                case Segment::Kind::line: d = std::min(d, point_segment_distance(q, s.a, s.b)); break;
                case Segment::Kind::ray: d = std::min(d, point_segment_distance(q, s.a, s.a + s.b * 1e6)); break;
                default:
                    for (int k = 0; k <= 256; ++k) {
                        double th = s.t0 + (s.t1 - s.t0) * k / 256.0;
                        cplx z = s.kind == Segment::Kind::arc
                                     ? s.center + cplx(s.rx * std::cos(th), s.ry * std::sin(th))
                                     : jouk(s.mid, s.half, s.rho0 + (s.rho1 - s.rho0) * k / 256.0, th);
                        d = std::min(d, std::abs(z - q));
                    }
            }
        }
    return d;
}

ContourPath path_from_base(const RealHyperellipticCurve& c, const CurvePoint& target, const Planner& pl) {
    if (!target.infinite && target.side == 0 && c.on_slit(target.z) && c.branch_index(target.z) < 0)
        throw ValidationError("path_from_base: slit target needs a side");
    if (target.sheet == Sheet::minus && target.side == 0 && !(c.branch_index(target.z) >= 0)) {
        Planner m = pl;
        for (cplx& o : m.obstacles) o = std::conj(o);
        return mirrored(path_from_base(c, mirror_involution(target), m));
    }
    if (!target.infinite && target.side >= 0 && target.z == basepoint()) return {};
    const double X = c.right_end() + pl.crossing_gap;
    static const double factors[] = {1.0, 0.7, 1.4, 0.5, 2.0, 0.35, 2.8, 0.25};
    ContourPath best;
    double best_clear = -1;
    for (double f : factors) {
        ContourPath p = plan(c, target, pl.height * f, X);
        if (pl.obstacles.empty()) return p;
        double cl = path_clearance(p, pl.obstacles);
        if (cl >= 0.05 * pl.height) return p;
        if (cl > best_clear) {
            best_clear = cl;
            best = p;
        }
    }
    return best;
}

}  // namespace maxperiodic::curve
