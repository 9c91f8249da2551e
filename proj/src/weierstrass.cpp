#include "maxperiodic/weierstrass.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::weierstrass {

using curve::Segment;
const cplx I(0, 1);
const cplx two_pi_i(0, 2 * M_PI);

ThirdKind::ThirdKind(const RealHyperellipticCurve& c, const std::vector<std::pair<CurvePoint, double>>& poles)
    : n_(c.genus()), hol_(CVec::Zero(c.genus())) {
    double total = 0, finite_total = 0;
    for (auto& [p, r] : poles) {
        total += r;
        if (p.infinite) {
            (p.sheet == Sheet::plus ? inf_plus_ : inf_minus_) += r;
        } else {
            if (c.branch_index(p.z, 1e-14) >= 0) throw ValidationError("third-kind form: pole at a branch point");
            finite_.push_back({p, r, c.eval_w(p)});
            finite_total += r;
        }
    }
    if (std::abs(total) > 1e-12) throw ValidationError("third-kind form: residues must sum to zero");
    sigma_ = 0.5 * (inf_minus_ - inf_plus_);
}

cplx ThirdKind::operator()(cplx z, cplx w) const {
    cplx acc(0, 0);
    for (const PoleTerm& t : finite_) acc += t.residue * (w + t.wp) / (z - t.point.z);
    acc *= 0.5;
    cplx p(1, 0), h(0, 0);
    for (int k = 0; k < n_; ++k, p *= z) h += hol_[k] * p;
    return (acc + h + sigma_ * p) / w;
}

std::vector<curve::Pole> ThirdKind::residue_table() const {
    std::vector<curve::Pole> out;
    for (const PoleTerm& t : finite_) out.push_back({t.point, t.residue});
    if (inf_plus_ != 0) out.push_back({CurvePoint::infinity(Sheet::plus), inf_plus_});
    if (inf_minus_ != 0) out.push_back({CurvePoint::infinity(Sheet::minus), inf_minus_});
    return out;
}

curve::DifferentialForm ThirdKind::form(const std::string& name, curve::Symmetry sym) const {
    ThirdKind copy = *this;
    return curve::DifferentialForm(name, [copy](cplx z, cplx w) { return copy(z, w); }, sym, residue_table());
}

std::vector<cplx> ThirdKind::poles_on(Sheet s) const {
    std::vector<cplx> out;
    for (const PoleTerm& t : finite_)
        if (t.point.sheet == s && t.point.side == 0) out.push_back(t.point.z);
    return out;
}

NormalizedThirdKind normalize(const RealHyperellipticCurve& c, const PeriodData& pd, ThirdKind t,
                              const quad::Options& opt) {
    int n = c.genus();
    auto a_periods = [&](const ThirdKind& f) {
        CVec a(n);
        for (int j = 1; j <= n; ++j) a[j - 1] = curve::slit_loop_integral(c, j, [&](cplx z, cplx w) { return f(z, w); }, opt);
        return a;
    };
    CVec A = a_periods(t);
    t.hol() -= pd.C.transpose() * A;
    NormalizedThirdKind out{t, a_periods(t), 0};
    out.a_certificate = n ? out.a_periods.cwiseAbs().maxCoeff() : 0;
    return out;
}

NormalizedThirdKind tau_form(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D) {
    std::vector<std::pair<CurvePoint, double>> poles;
    for (auto& [p, m] : D.points) {
        poles.push_back({p, -static_cast<double>(m)});
        poles.push_back({curve::mirror_involution(p), static_cast<double>(m)});
    }
    return normalize(c, pd, ThirdKind(c, poles));
}

NormalizedThirdKind kappa_form(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D1,
                               const Divisor& D2) {
    std::vector<std::pair<CurvePoint, double>> poles;
    for (auto& [p, m] : D1.points) {
        poles.push_back({p, -static_cast<double>(m)});
        poles.push_back({curve::mirror_involution(p), -static_cast<double>(m)});
    }
    for (auto& [p, m] : D2.points) {
        poles.push_back({p, static_cast<double>(m)});
        poles.push_back({curve::mirror_involution(p), static_cast<double>(m)});
    }
    return normalize(c, pd, ThirdKind(c, poles));
}

cplx b_period(const RealHyperellipticCurve& c, const ThirdKind& t, int j, const quad::Options& opt) {
    auto plus = t.poles_on(Sheet::plus), minus = t.poles_on(Sheet::minus);
    double best_clear = -1, best_bulge = 1;
    for (double bulge : {1.0, 0.6, 1.5, 0.4, 2.2, 0.25, 3.0}) {
        homology::Cycle cy = homology::b_cycle(c, j, bulge);
        double cl = std::min(curve::path_clearance({cy.path[0]}, plus), curve::path_clearance({cy.path[1]}, minus));
        if (cl > best_clear) {
            best_clear = cl;
            best_bulge = bulge;
        }
        if (cl > 0.05 * c.slit(j).half()) break;
    }
    homology::Cycle cy = homology::b_cycle(c, j, best_bulge);
    return curve::integrate(c, cy.path, [&](cplx z, cplx w) { return t(z, w); }, opt);
}

PrincipalFunction::PrincipalFunction(RealHyperellipticCurve c, ThirdKind exponent, Divisor num, Divisor den)
    : numerator(std::move(num)), denominator(std::move(den)), c_(std::move(c)), exponent_(std::move(exponent)) {}

std::vector<cplx> PrincipalFunction::obstacles(Sheet s) const { return exponent_.poles_on(s); }

cplx PrincipalFunction::log_value(const CurvePoint& p) const {
    curve::Planner pl;
    Sheet s = (p.side != 0 || p.infinite) ? Sheet::plus : p.sheet;
    if (p.infinite) s = p.sheet;
    for (cplx o : obstacles(s))
        if (p.infinite || std::abs(o - p.z) > 1e-9) pl.obstacles.push_back(o);
    curve::ContourPath path = curve::path_from_base(c_, p, pl);
    if (path.empty()) return 0.0;
    return curve::integrate(c_, path, [this](cplx z, cplx w) { return exponent_(z, w); }, opt);
}

PrincipalFunction principal_function(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& numerator,
                                     const Divisor& denominator, double tol) {
    if (numerator.degree() != denominator.degree())
        throw ValidationError("principal_function: numerator and denominator degrees differ");
    std::vector<std::pair<CurvePoint, double>> poles;
    for (auto& [p, m] : numerator.points) poles.push_back({p, static_cast<double>(m)});
    for (auto& [p, m] : denominator.points) poles.push_back({p, -static_cast<double>(m)});
    NormalizedThirdKind nt = normalize(c, pd, ThirdKind(c, poles));
    int n = c.genus();
    CVec B(n);
    for (int j = 1; j <= n; ++j) B[j - 1] = b_period(c, nt.form, j);
    CVec V = -B / two_pi_i;
    jacobian::JacobianLattice L(pd);
    jacobian::Reduction red = L.reduce(V);
    ThirdKind ex = nt.form;
    ex.hol() += two_pi_i * (pd.C.transpose() * red.imag_k.cast<cplx>());
    PrincipalFunction pf(c, ex, numerator, denominator);
    pf.m = red.imag_k;
    pf.l = red.real_k;
    pf.residual = red.distance;
    pf.b_raw = B;
    if (pf.residual > tol)
        throw ObstructionError("divisor is not principal: lattice distance " + std::to_string(pf.residual),
                               pf.residual);
    return pf;
}

PrincipalFunction build_g0(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e,
                           double tol) {
    std::string why = jacobian::check_in_domain(c, D);
    if (!why.empty()) throw ValidationError("divisor: " + why);
    Divisor num = D + Divisor{{{CurvePoint::at(e, Sheet::plus), 1}}};
    return principal_function(c, pd, num, jacobian::mirror(num), tol);
}

namespace {

std::vector<cplx> poly_roots(const CVec& p) {
    int deg = static_cast<int>(p.size()) - 1;
    while (deg > 0 && p[deg] == 0.0) --deg;
    if (deg <= 0) return {};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -p[i] / p[deg];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
    std::vector<cplx> r;
    for (int i = 0; i < deg; ++i) r.push_back(es.eigenvalues()[i]);
    // Newton polish
    for (cplx& z : r)
        for (int it = 0; it < 5; ++it) {
            cplx v(0, 0), d(0, 0);
            for (int k = deg; k >= 0; --k) {
                d = d * z + v;
                v = v * z + p[k];
            }
            if (d == 0.0) break;
            z -= v / d;
        }
    return r;
}

cplx poly_eval(const CVec& p, cplx z) {
    cplx v(0, 0);
    for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k) v = v * z + p[k];
    return v;
}

}  // namespace

ReferenceForm reference_form(const RealHyperellipticCurve& c, const PeriodData& pd, cplx e, const Divisor& avoid,
                             double margin) {
    int n = c.genus();
    double scale = c.right_end() - c.left_end();
    std::mt19937 rng(2024);
    std::normal_distribution<double> nd;
    std::vector<cplx> bad{e, std::conj(e), 1.0};
    for (auto& [p, m] : avoid.points) {
        bad.push_back(p.z);
        bad.push_back(std::conj(p.z));
    }
    for (int attempt = 0; attempt < 200; ++attempt) {
        ReferenceForm rf;
        rf.attempts = attempt + 1;
        rf.lambda = Eigen::VectorXd::Zero(n);
        if (attempt < n)
            rf.lambda[attempt] = 1;
        else
            for (int j = 0; j < n; ++j) rf.lambda[j] = nd(rng);
        rf.poly = pd.C.transpose() * rf.lambda.cast<cplx>();
        if (std::abs(rf.poly[n - 1]) < 1e-8 * rf.poly.cwiseAbs().maxCoeff()) continue;
        rf.zeros = poly_roots(rf.poly);
        bool ok = true;
        for (size_t i = 0; i < rf.zeros.size() && ok; ++i) {
            cplx z = rf.zeros[i];
            if (c.distance_to_slits(z) < margin * scale) ok = false;
            for (cplx b : bad)
                if (std::abs(z - b) < margin * scale) ok = false;
            for (size_t k = i + 1; k < rf.zeros.size(); ++k)
                if (std::abs(z - rf.zeros[k]) < margin * scale) ok = false;
        }
        if (ok) return rf;
    }
    throw ValidationError("reference_form: no admissible real combination found");
}

Phi3 build_phi30(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e, double tol) {
    Phi3 out;
    out.ref = reference_form(c, pd, e, D);
    Divisor num = D + jacobian::mirror(D);
    Divisor den{{{CurvePoint::infinity(Sheet::plus), 1}, {CurvePoint::infinity(Sheet::minus), 1}}};
    for (cplx z : out.ref.zeros) den = den + Divisor{{{CurvePoint::at(z, Sheet::plus), 1}, {CurvePoint::at(z, Sheet::minus), 1}}};
    out.f = principal_function(c, pd, num, den, tol);
    cplx p1 = poly_eval(out.ref.poly, 1.0);
    out.kappa = std::conj(p1) / std::abs(p1);
    return out;
}

cplx WeierstrassData::ref_poly(cplx z) const { return poly_eval(phi3.ref.poly, z); }

Eigen::Vector3cd WeierstrassData::Phi_coef(cplx z, cplx w, cplx lg, cplx lf) const {
    cplx g = g_of_log(lg);
    cplx p3 = phi3_coef(z, w, lf);
    cplx ig = 1.0 / g;
    return {0.5 * I * (ig - g) * p3, -0.5 * (ig + g) * p3, p3};
}

cplx WeierstrassData::g(const CurvePoint& p) const { return theta * g0(p); }
cplx WeierstrassData::g_infinity() const { return g(CurvePoint::infinity(Sheet::plus)); }

cplx WeierstrassData::phi3_at(const CurvePoint& p) const {
    return r * phi3.kappa * phi3.f(p) * ref_poly(p.z) / curve.eval_w(p);
}

Eigen::Vector3cd WeierstrassData::Phi_at(const CurvePoint& p) const {
    return Phi_coef(p.z, curve.eval_w(p), g0.log_value(p), phi3.f.log_value(p));
}

std::vector<cplx> WeierstrassData::obstacles(Sheet s) const {
    std::vector<cplx> o = g0.obstacles(s), f = phi3.f.obstacles(s);
    o.insert(o.end(), f.begin(), f.end());
    return o;
}

Tracker::Tracker(const WeierstrassData& W, double tol, int order) : W_(W), tol_(tol), order_(order) {}

TrackState Tracker::panel(const TrackState& s, const Segment& seg, double lo, double hi) const {
    const quad::Rule& rule = quad::gauss_legendre(order_);
    const Eigen::MatrixXd& S = quad::integration_matrix(order_);
    const int m = order_;
    double h = hi - lo;
    std::vector<curve::Sample> q(m);
    Eigen::VectorXcd og(m), of(m);
    for (int i = 0; i < m; ++i) {
        q[i] = curve::sample(W_.curve, seg, lo + h * rule.x[i]);
        og[i] = W_.g0.dlog(q[i].z, q[i].w) * q[i].dz;
        of[i] = W_.phi3.f.dlog(q[i].z, q[i].w) * q[i].dz;
    }
    Eigen::VectorXcd Lg = (S.cast<cplx>() * og) * h, Lf = (S.cast<cplx>() * of) * h;
    TrackState out = s;
    for (int i = 0; i < m; ++i) {
        double wt = rule.w[i] * h;
        out.lg += wt * og[i];
        out.lf += wt * of[i];
        out.I += wt * W_.Phi_coef(q[i].z, q[i].w, s.lg + Lg[i], s.lf + Lf[i]) * q[i].dz;
    }
    return out;
}

TrackState Tracker::go(const TrackState& s, const Segment& seg, double lo, double hi, int depth) const {
    TrackState whole = panel(s, seg, lo, hi);
    double mid = 0.5 * (lo + hi);
    TrackState left = panel(s, seg, lo, mid);
    TrackState both = panel(left, seg, mid, hi);
    double diff = std::max({std::abs(both.lg - whole.lg), std::abs(both.lf - whole.lf),
                            (both.I - whole.I).cwiseAbs().maxCoeff()});
    double scale = std::max(1.0, (both.I - s.I).cwiseAbs().maxCoeff());
    if (diff <= tol_ * (hi - lo) * scale || diff <= 1e-15 * scale) return both;
    if (depth >= 40) throw QuadratureError("tracked integration: tolerance not reached");
    TrackState l = go(s, seg, lo, mid, depth + 1);
    return go(l, seg, mid, hi, depth + 1);
}

TrackState Tracker::advance(const TrackState& s, const Segment& seg) const { return go(s, seg, 0.0, 1.0, 0); }

TrackState Tracker::along(TrackState s, const curve::ContourPath& p) const {
    for (const Segment& seg : p) s = advance(s, seg);
    return s;
}

curve::ContourPath Tracker::plan(const CurvePoint& target) const {
    curve::Planner pl;
    Sheet s = (target.side != 0) ? Sheet::plus : target.sheet;
    for (cplx o : W_.obstacles(s))
        if (target.infinite || std::abs(o - target.z) > 1e-9) pl.obstacles.push_back(o);
    return curve::path_from_base(W_.curve, target, pl);
}

TrackState Tracker::from_base(const CurvePoint& target) const { return along(TrackState{}, plan(target)); }

namespace {

CurvePoint start_point(const RealHyperellipticCurve& c, const Segment& seg) {
    cplx z = seg.start();
    if (z.imag() == 0 && c.on_slit(z) && c.branch_index(z) < 0) {
        Segment g = seg;
        g.ends = quad::Ends::none;
        double y = curve::sample(c, g, 1e-7).z.imag();
        int side = y >= 0 ? 1 : -1;
        if (seg.sheet == Sheet::minus) side = -side;
        return CurvePoint::on_slit(z.real(), side);
    }
    return CurvePoint::at(z, seg.sheet);
}

}  // namespace

Eigen::Vector3cd cycle_integral(const Tracker& T, const curve::ContourPath& cycle) {
    TrackState s0 = T.from_base(start_point(T.data().curve, cycle.front()));
    TrackState s1 = T.along(s0, cycle);
    return s1.I - s0.I;
}

curve::ContourPath e_loop(const WeierstrassData& W, double radius) {
    double rad = radius;
    if (rad <= 0) {
        double d = W.curve.distance_to_slits(W.e);
        for (cplx o : W.obstacles(Sheet::plus))
            if (std::abs(o - W.e) > 1e-12) d = std::min(d, std::abs(o - W.e));
        rad = 0.3 * d;
    }
    return {Segment::arc(W.e, rad, rad, 0, 2 * M_PI, Sheet::plus)};
}

FluxVector flux(const Tracker& T, const curve::ContourPath& cycle, const std::string& name) {
    Eigen::Vector3cd v = cycle_integral(T, cycle);
    domain::MinkowskiVector m{v[0].imag(), v[1].imag(), v[2].imag()};
    return {m, name, domain::classify(m, 1e-9)};
}

curve::ContourPath a_loop(const WeierstrassData& W, int i) {
    curve::Slit s = W.curve.slit(i);
    double d = 1e300;
    for (cplx o : W.obstacles(Sheet::plus)) {
        double x = std::clamp(o.real(), s.a, s.b);
        d = std::min(d, std::abs(o - cplx(x, 0)));
    }
    for (int j = 0; j < W.curve.slit_count(); ++j)
        if (j != i) {
            curve::Slit t = W.curve.slit(j);
            d = std::min(d, std::min(std::abs(t.a - s.b), std::abs(s.a - t.b)));
        }
    double reach = std::min(0.3 * d, 0.15 * s.half());
    double rho = std::acosh(1.0 + reach / s.half());
    return homology::slit_loop(W.curve, i, rho).path;
}

ChiNormalization normalize_chi(WeierstrassData& W, int eps0, const domain::MinkowskiVector& q0) {
    if (eps0 != 1 && eps0 != -1) throw ValidationError("eps0 must be +1 or -1");
    W.theta = 1;
    W.r = 1;
    Tracker T(W, 1e-12);
    Eigen::Vector3cd pe = cycle_integral(T, e_loop(W));
    ChiNormalization chi;
    chi.V0 = {pe[0].real(), pe[1].real(), pe[2].real()};
    chi.wx = cplx(chi.V0.x1, chi.V0.x2);
    if (std::abs(chi.wx) < 1e-12) throw ValidationError("normalize_chi: vanishing residue at the end");
    FluxVector f0 = flux(T, a_loop(W, 0), "a0");
    chi.flux_sign = f0.v.x3 >= 0 ? 1 : -1;
    chi.theta = std::conj(chi.wx) / std::abs(chi.wx);
    chi.r = eps0 * chi.flux_sign / std::abs(chi.wx);
    W.theta = chi.theta;
    W.r = chi.r;
    W.eps0 = eps0;
    W.q0 = q0;
    W.chi = chi;
    return chi;
}

void certify(WeierstrassData& W, int samples) {
    const RealHyperellipticCurve& c = W.curve;
    Certificates& ct = W.cert;
    ct.abel_g = W.g0.residual;
    ct.abel_f = W.phi3.f.residual;
    // a-periods of the exponent forms must be 2 pi i times integers
    auto int_defect = [&](const PrincipalFunction& pf) {
        double d = 0;
        for (int j = 1; j <= c.genus(); ++j) {
            cplx a = curve::slit_loop_integral(c, j, [&](cplx z, cplx w) { return pf.dlog(z, w); }) / two_pi_i;
            d = std::max(d, std::abs(a - std::round(a.real())));
        }
        return d;
    };
    ct.a_period_g = int_defect(W.g0);
    ct.a_period_f = int_defect(W.phi3.f);

    // |g| on the slits, both edges, including points close to the branch points
    ct.g_modulus_on_slits = 0;
    for (int i = 0; i < c.slit_count(); ++i) {
        curve::Slit s = c.slit(i);
        for (int k = 0; k < 12; ++k) {
            double t = 0.5 * (1 - std::cos(M_PI * (k + 0.5) / 12));
            for (int side : {1, -1}) {
                cplx g = W.g(CurvePoint::on_slit(s.a + (s.b - s.a) * t, side));
                ct.g_modulus_on_slits = std::max(ct.g_modulus_on_slits, std::abs(std::abs(g) - 1));
            }
        }
    }

    // degree by winding: zeros of g in the plus sheet
    {
        double R = 2 * (std::max(std::abs(c.left_end()), std::abs(c.right_end())) + 1);
        for (cplx o : W.obstacles(Sheet::plus)) R = std::max(R, 2 * std::abs(o) + 1);
        auto dl = [&](cplx z, cplx w) { return W.g0.dlog(z, w); };
        cplx big = curve::integrate(c, {Segment::arc(0.0, R, R, 0, 2 * M_PI, Sheet::plus)}, dl);
        cplx loops = 0;
        for (int i = 0; i < c.slit_count(); ++i) loops += curve::slit_loop_integral(c, i, dl);
        ct.degree_winding = static_cast<int>(std::lround(((big - loops) / two_pi_i).real()));
    }

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ux(c.left_end() - 1, c.right_end() + 1), uy(-1.5, 1.5);
    ct.g_mirror = ct.phi3_antisymmetry = ct.conformality = 0;
    double rsum = 0;
    int rcount = 0;
    auto obst = W.obstacles(Sheet::plus);
    for (int k = 0; k < samples; ++k) {
        cplx z(ux(rng), uy(rng));
        if (c.distance_to_slits(z) < 1e-2) {
            --k;
            continue;
        }
        bool near = false;
        for (cplx o : obst)
            if (std::abs(o - z) < 1e-2 || std::abs(std::conj(o) - z) < 1e-2) near = true;
        if (near) {
            --k;
            continue;
        }
        CurvePoint P = CurvePoint::at(z, Sheet::plus);
        CurvePoint JP = curve::mirror_involution(P);
        cplx lg = W.g0.log_value(P), lf = W.phi3.f.log_value(P);
        Eigen::Vector3cd Phi = W.Phi_coef(z, c.eval_w(P), lg, lf);
        double nrm = Phi.squaredNorm();
        cplx q = Phi[0] * Phi[0] + Phi[1] * Phi[1] - Phi[2] * Phi[2];
        ct.conformality = std::max(ct.conformality, std::abs(q) / nrm);
        if (k < 100) {
            cplx g = W.g_of_log(lg), gJ = W.g(JP);
            cplx prod = gJ * std::conj(g);
            ct.g_mirror = std::max(ct.g_mirror, std::abs(prod - 1.0));
            rsum += prod.real();
            ++rcount;
            cplx p3 = Phi[2], p3J = W.phi3_at(JP);
            ct.phi3_antisymmetry = std::max(ct.phi3_antisymmetry, std::abs(p3J + std::conj(p3)) / std::abs(p3));
        }
    }
    ct.fitted_r = rcount ? rsum / rcount : 1.0;
}

WeierstrassData build(const RealHyperellipticCurve& c, const PeriodData& pd, const Divisor& D, cplx e, int eps0,
                      const domain::MinkowskiVector& q0, const BuildOptions& opt) {
    WeierstrassData W;
    W.curve = c;
    W.periods = pd;
    W.e = e;
    W.D = D;
    W.g0 = build_g0(c, pd, D, e, opt.abel_tol);
    W.phi3 = build_phi30(c, pd, D, e, opt.abel_tol);
    normalize_chi(W, eps0, q0);
    certify(W, opt.certificate_samples);
    return W;
}

}  // namespace maxperiodic::weierstrass
