#include "maxperiodic/homology.hpp"

#include <cmath>
#include <ostream>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::homology {

using curve::Segment;
using curve::Sheet;

Cycle slit_loop(const RealHyperellipticCurve& c, int i, double rho, Sheet s) {
    Cycle cy;
    cy.name = "a" + std::to_string(i);
    cy.slit = i;
    cy.path = {Segment::joukowski(c.slit(i), rho, rho, 0.0, 2 * M_PI, s)};
    return cy;
}

namespace {

// Start points on slit 0: distinct, ordered so that the arcs are nested.
double b_start(const RealHyperellipticCurve& c, int j) {
    curve::Slit s0 = c.slit(0);
    int n = c.genus();
    double span = 0.5 * (s0.b - s0.a);
    double x = s0.a + span * (0.5 + 0.9 * static_cast<double>(n - j + 1) / (n + 1));
    if (std::abs(x - 1.0) < 1e-9 * span) x += 1e-3 * span;
    return x;
}

}  // namespace

Cycle b_cycle(const RealHyperellipticCurve& c, int j, double bulge) {
    double s = b_start(c, j);
    double m = c.slit(j).mid();
    double cx = 0.5 * (s + m), r = 0.5 * (s - m);
    Cycle cy;
    cy.name = "b" + std::to_string(j);
    cy.path = {Segment::arc(cx, r, bulge * r, 0.0, M_PI, Sheet::plus),
               Segment::arc(cx, r, bulge * r, M_PI, 2 * M_PI, Sheet::minus)};
    cy.crossings = {{j, m, Sheet::plus}, {0, s, Sheet::minus}};
    return cy;
}

HomologyBasis build_basis(const RealHyperellipticCurve& c, const BasisOptions& opt) {
    HomologyBasis hb;
    for (int j = 1; j <= c.genus(); ++j) {
        hb.a.push_back(slit_loop(c, j, opt.loop_rho));
        hb.b.push_back(b_cycle(c, j, opt.bulge));
    }
    hb.a0 = slit_loop(c, 0, opt.loop_rho);
    return hb;
}

namespace {

struct Poly {
    std::vector<cplx> pts;
    Sheet sheet;
};

std::vector<Poly> polylines(const RealHyperellipticCurve& c, const Cycle& cy, int m = 2048) {
    std::vector<Poly> out;
    for (const Segment& s : cy.path) {
        Segment g = s;
        g.ends = quad::Ends::none;
        Poly p{{}, s.sheet};
        p.pts.push_back(g.start());
        for (int k = 1; k < m; ++k) p.pts.push_back(curve::sample(c, g, static_cast<double>(k) / m).z);
        p.pts.push_back(g.finish());
        out.push_back(std::move(p));
    }
    return out;
}

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

}  // namespace

int intersection_number(const RealHyperellipticCurve& c, const Cycle& x, const Cycle& y) {
    auto px = polylines(c, x), py = polylines(c, y);
    int total = 0;
    for (const Poly& p : px)
        for (const Poly& q : py) {
            if (p.sheet != q.sheet) continue;
            for (size_t i = 0; i + 1 < p.pts.size(); ++i)
                for (size_t k = 0; k + 1 < q.pts.size(); ++k) {
                    cplx a = p.pts[i], da = p.pts[i + 1] - a;
                    cplx b = q.pts[k], db = q.pts[k + 1] - b;
                    double den = cross(da, db);
                    if (den == 0) continue;
                    double t = cross(b - a, db) / den, u = cross(b - a, da) / den;
                    // half-open parameter ranges so shared vertices count once
                    if (t >= 0 && t < 1 && u >= 0 && u < 1) total += den > 0 ? 1 : -1;
                }
        }
    return total;
}

Eigen::VectorXcd PeriodData::eta(cplx z, cplx w) const {
    Eigen::VectorXcd mono(n);
    cplx p(1, 0);
    for (int k = 0; k < n; ++k, p *= z) mono[k] = p / w;
    return C * mono;
}

curve::DifferentialForm PeriodData::eta_form(int j) const {
    Eigen::VectorXcd coef = C.row(j).transpose();
    return curve::DifferentialForm(
        "eta" + std::to_string(j + 1),
        [coef](cplx z, cplx w) {
            cplx acc(0, 0), p(1, 0);
            for (int k = 0; k < coef.size(); ++k, p *= z) acc += coef[k] * p;
            return acc / w;
        },
        curve::Symmetry::j_even);
}

PeriodData dual_basis_and_periods(const RealHyperellipticCurve& c, const HomologyBasis& basis,
                                  const quad::Options& opt) {
    PeriodData pd;
    int n = pd.n = c.genus();
    auto raw = [n](cplx z, cplx w) {
        Eigen::VectorXcd v(n);
        cplx p(1, 0);
        for (int k = 0; k < n; ++k, p *= z) v[k] = p / w;
        return v;
    };
    pd.raw_a.resize(n, n);
    pd.raw_b.resize(n, n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXcd a = curve::slit_loop_integral(c, basis.a[j].slit, raw, opt);
        double err = 0;
        Eigen::VectorXcd b = curve::integrate(c, basis.b[j].path, raw, opt, &err);
        pd.quad_error = std::max(pd.quad_error, err);
        pd.raw_a.row(j) = a.transpose();
        pd.raw_b.row(j) = b.transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(pd.raw_a.transpose());
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300)
        throw ValidationError("singular a-period matrix (degenerate branch configuration)");
    pd.C = lu.inverse();
    pd.Pi = pd.raw_b * pd.C.transpose();
    pd.eta_a.resize(n, n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd v = curve::integrate(c, basis.a[i].path, [&](cplx z, cplx w) { return pd.eta(z, w); }, opt);
        pd.eta_a.col(i) = v;  // eta_a(j,i) = a_i-period of eta_j
    }
    return pd;
}

void write_periods_csv(std::ostream& os, const PeriodData& pd, const std::string& provenance) {
    os.precision(17);
    bool tag = !provenance.empty();
    if (tag) os << "config_hash,";
    os << "form";
    for (const char* kind : {"a", "b"})
        for (int k = 1; k <= pd.n; ++k) os << ',' << kind << k << "_re," << kind << k << "_im";
    os << "\r\n";
    for (int j = 0; j < pd.n; ++j) {
        if (tag) os << provenance << ',';
        os << "eta" << j + 1;
        for (int k = 0; k < pd.n; ++k) os << ',' << pd.eta_a(j, k).real() << ',' << pd.eta_a(j, k).imag();
        for (int k = 0; k < pd.n; ++k) os << ',' << pd.Pi(k, j).real() << ',' << pd.Pi(k, j).imag();
        os << "\r\n";
    }
}

}  // namespace maxperiodic::homology
