#include "maxperiodic/surface.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "maxperiodic/errors.hpp"
#include "maxperiodic/homology.hpp"

namespace maxperiodic::surface {

using curve::Segment;
using curve::Sheet;
using curve::Slit;

double wrap_diff(double d) { return d - std::floor(d + 0.5); }
double wrap01(double x) { return x - std::floor(x); }

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& f) {
    int t = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    t = std::min(t, count);
    if (t <= 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&] {
            for (;;) {
                int i = next++;
                if (i >= count) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

double horizontal_distance(const MinkowskiVector& a, const MinkowskiVector& b) {
    return std::hypot(wrap_diff(a.x1 - b.x1), a.x2 - b.x2);
}

double lattice_distance(const MinkowskiVector& a, const MinkowskiVector& b) {
    return std::max({std::abs(wrap_diff(a.x1 - b.x1)), std::abs(a.x2 - b.x2), std::abs(a.x3 - b.x3)});
}

// |grad u| of the graph whose unit normal is the stereographic image of g.
double grad_from_g(cplx g) {
    double m = std::abs(g);
    return 2 * m / (1 + m * m);
}

double distance_to_marks(double x1, double x2, const Mark& mark) {
    double d = 1e300;
    for (const auto& q : mark.q) d = std::min(d, std::hypot(wrap_diff(x1 - q.x1), x2 - q.x2));
    return d;
}

// Whether the straight segment a-b meets a slit.
bool crosses_slit(const curve::RealHyperellipticCurve& c, cplx a, cplx b) {
    if (a.imag() == 0 && c.on_slit(a)) return true;
    if (b.imag() == 0 && c.on_slit(b)) return true;
    if ((a.imag() > 0 && b.imag() > 0) || (a.imag() < 0 && b.imag() < 0)) return false;
    if (a.imag() == b.imag()) return false;
    double t = a.imag() / (a.imag() - b.imag());
    double x = a.real() + t * (b.real() - a.real());
    return c.slit_containing(x) >= 0;
}

cplx jouk(const Slit& s, double rho, double t) {
    cplx zeta = std::exp(cplx(rho, t));
    return s.mid() + s.half() * 0.5 * (zeta + 1.0 / zeta);
}

cplx jouk_drho(const Slit& s, double rho, double t) {
    cplx zeta = std::exp(cplx(rho, t));
    return s.half() * 0.5 * (zeta - 1.0 / zeta);
}

double safe_rho(const WeierstrassData& W, int j, double fraction) {
    Slit s = W.curve.slit(j);
    double d = 1e300;
    for (int k = 0; k < W.curve.slit_count(); ++k)
        if (k != j) {
            Slit t = W.curve.slit(k);
            d = std::min(d, std::min(std::abs(t.a - s.b), std::abs(s.a - t.b)));
        }
    double x = std::clamp(W.e.real(), s.a, s.b);
    d = std::min(d, std::abs(W.e - cplx(x, 0)));
    return std::acosh(1.0 + fraction * d / s.half());
}

Vertex make_vertex(const Immersion& im, cplx z, const TrackState& s) {
    const WeierstrassData& W = im.data();
    Vertex v;
    v.p = CurvePoint::at(z, Sheet::plus);
    v.X = im.X(s);
    v.X.x1 = wrap01(v.X.x1);
    v.g = W.g_of_log(s.lg);
    Eigen::Vector3cd Phi = W.Phi_coef(z, W.curve.w_plus(z), s.lg, s.lf);
    double m = std::abs(v.g);
    v.metric = std::pow(1 / m - m, 2) * std::norm(Phi[2]) / 4;
    // at a singular point the tangent plane is lightlike and the normal is undefined
    v.singular = std::abs(1 - m) < 1e-8;
    if (!v.singular) {
        v.normal = domain::stereographic(v.g);
        MinkowskiVector t = tangent_normal(Phi);
        double nn = std::sqrt(v.normal.x1 * v.normal.x1 + v.normal.x2 * v.normal.x2 + v.normal.x3 * v.normal.x3);
        auto dist = [&](double s) {
            return std::sqrt(std::pow(t.x1 - s * v.normal.x1, 2) + std::pow(t.x2 - s * v.normal.x2, 2) +
                             std::pow(t.x3 - s * v.normal.x3, 2));
        };
        v.normal_defect = std::min(dist(1), dist(-1)) / nn;
    }
    v.valid = true;
    return v;
}

struct Node {
    cplx z;
    int chart;  // -1: plain coordinate z; j: Joukowski coordinates (rho, t) of slit j
    double rho = 0, t = 0;
    TrackState s;
    MinkowskiVector X;
};

// Tree of tracked domain samples covering the image window, used to seed the inversion.
class Scatter {
public:
    Scatter(const Immersion& im, double x2lo, double x2hi, int angles, int threads);
    std::optional<Vertex> invert(double x1, double x2) const;
    const std::vector<Node>& nodes() const { return nodes_; }

private:
    struct Task {
        int parent;
        std::vector<Segment> segs;
        std::vector<Node> meta;  // z, chart, rho, t of each produced node
        bool stop_outside = false;
    };
    void run(std::vector<Task>& tasks, std::vector<std::vector<int>>* produced = nullptr);
    std::optional<Vertex> newton(const Node& seed, double x1, double x2) const;
    int nearest(cplx z, const std::function<bool(const Node&)>& ok) const;

    const Immersion& im_;
    double lo_, hi_;
    int threads_;
    std::vector<Node> nodes_;
    std::mutex mu_;
    double cell_ = 0.05;
    std::unordered_map<long long, std::vector<int>> buckets_;
    int nbx_ = 0;
    long long key(int a, int b) const { return static_cast<long long>(b) * 1000003LL + a; }
};

void Scatter::run(std::vector<Task>& tasks, std::vector<std::vector<int>>* produced) {
    const Tracker& T = im_.tracker();
    if (produced) produced->assign(tasks.size(), {});
    parallel_for(static_cast<int>(tasks.size()), threads_, [&](int k) {
        Task& task = tasks[k];
        TrackState s;
        if (task.parent >= 0) {
            std::lock_guard<std::mutex> lock(mu_);
            s = nodes_[task.parent].s;
        }
        std::vector<Node> out;
        int outside = 0;
        for (size_t i = 0; i < task.segs.size(); ++i) {
            s = T.advance(s, task.segs[i]);
            Node nd = task.meta[i];
            nd.s = s;
            nd.X = im_.X(s);
            out.push_back(nd);
            if (task.stop_outside) {
                outside = (nd.X.x2 < lo_ - 0.5 || nd.X.x2 > hi_ + 0.5) ? outside + 1 : 0;
                if (outside >= 2) break;
            }
        }
        std::lock_guard<std::mutex> lock(mu_);
        for (Node& nd : out) {
            if (produced) (*produced)[k].push_back(static_cast<int>(nodes_.size()));
            nodes_.push_back(nd);
        }
    });
}

int Scatter::nearest(cplx z, const std::function<bool(const Node&)>& ok) const {
    int best = -1;
    double bd = 1e300;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].chart >= 0) continue;
        double d = std::abs(nodes_[i].z - z);
        if (d < bd && ok(nodes_[i])) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Scatter::Scatter(const Immersion& im, double x2lo, double x2hi, int angles, int threads)
    : im_(im), lo_(x2lo), hi_(x2hi), threads_(threads) {
    const WeierstrassData& W = im.data();
    const auto& c = W.curve;
    double L = c.left_end(), R = c.right_end(), span = R - L;
    double xa = L - 0.6 * span, xb = R + 0.6 * span, Y = 0.8 * span;
    const int NX = 40, NY = 16;
    std::vector<double> xs(NX), ys(NY);
    for (int i = 0; i < NX; ++i) xs[i] = xa + (xb - xa) * (i + 0.5 + 0.0131) / NX;
    for (int k = 0; k < NY; ++k) ys[k] = Y * (k + 0.5 + 0.0117) / NY;
    const double top = ys[NY - 1];
    auto node = [](cplx z) { return Node{z, -1, 0, 0, {}, {}}; };

    // top row from the basepoint
    int istar = 0;
    for (int i = 0; i < NX; ++i)
        if (std::abs(xs[i] - 1) < std::abs(xs[istar] - 1)) istar = i;
    std::vector<int> top_idx(NX), bot_idx(NX);
    {
        std::vector<Task> t(1);
        t[0].parent = -1;
        cplx z0 = curve::basepoint();
        t[0].segs = {Segment::line(z0, cplx(1, top)), Segment::line(cplx(1, top), cplx(xs[istar], top))};
        t[0].meta = {node(cplx(1, top)), node(cplx(xs[istar], top))};
        std::vector<std::vector<int>> pr;
        run(t, &pr);
        top_idx[istar] = pr[0][1];
    }
    {
        std::vector<Task> t(2);
        t[0].parent = t[1].parent = top_idx[istar];
        for (int i = istar + 1; i < NX; ++i) {
            t[0].segs.push_back(Segment::line(cplx(xs[i - 1], top), cplx(xs[i], top)));
            t[0].meta.push_back(node(cplx(xs[i], top)));
        }
        for (int i = istar - 1; i >= 0; --i) {
            t[1].segs.push_back(Segment::line(cplx(xs[i + 1], top), cplx(xs[i], top)));
            t[1].meta.push_back(node(cplx(xs[i], top)));
        }
        std::vector<std::vector<int>> pr;
        run(t, &pr);
        for (int i = istar + 1; i < NX; ++i) top_idx[i] = pr[0][i - istar - 1];
        for (int i = istar - 1; i >= 0; --i) top_idx[i] = pr[1][istar - 1 - i];
    }
    // upper columns, plus the crossing to the lower half plane beyond the right end
    {
        std::vector<Task> t(NX + 1);
        for (int i = 0; i < NX; ++i) {
            t[i].parent = top_idx[i];
            for (int k = NY - 2; k >= 0; --k) {
                t[i].segs.push_back(Segment::line(cplx(xs[i], ys[k + 1]), cplx(xs[i], ys[k])));
                t[i].meta.push_back(node(cplx(xs[i], ys[k])));
            }
        }
        Task& cr = t[NX];
        cr.parent = top_idx[NX - 1];
        cr.segs.push_back(Segment::line(cplx(xs[NX - 1], top), cplx(xs[NX - 1], -top)));
        cr.meta.push_back(node(cplx(xs[NX - 1], -top)));
        for (int i = NX - 2; i >= 0; --i) {
            cr.segs.push_back(Segment::line(cplx(xs[i + 1], -top), cplx(xs[i], -top)));
            cr.meta.push_back(node(cplx(xs[i], -top)));
        }
        std::vector<std::vector<int>> pr;
        run(t, &pr);
        for (int i = NX - 1; i >= 0; --i) bot_idx[i] = pr[NX][NX - 1 - i];
    }
    // lower columns
    {
        std::vector<Task> t(NX);
        for (int i = 0; i < NX; ++i) {
            t[i].parent = bot_idx[i];
            for (int k = NY - 2; k >= 0; --k) {
                t[i].segs.push_back(Segment::line(cplx(xs[i], -ys[k + 1]), cplx(xs[i], -ys[k])));
                t[i].meta.push_back(node(cplx(xs[i], -ys[k])));
            }
        }
        run(t);
    }

    // rings: Joukowski rings around every slit, log-polar rings at e and at infinity
    std::vector<Task> rings;
    for (int j = 0; j < c.slit_count(); ++j) {
        Slit s = c.slit(j);
        double rho_out = safe_rho(W, j, 0.45);
        std::vector<double> levels;
        for (double r = rho_out; r > 2e-5; r /= 1.3) levels.push_back(r);
        for (int m = 0; m < angles; ++m) {
            double t = 2 * M_PI * (m + 0.5) / angles;
            cplx z = jouk(s, rho_out, t);
            int p = nearest(z, [&](const Node& nd) { return nd.z.imag() * z.imag() > 0; });
            Task task;
            task.parent = p;
            task.segs.push_back(Segment::line(nodes_[p].z, z));
            task.meta.push_back(Node{z, j, rho_out, t, {}, {}});
            for (size_t l = 1; l < levels.size(); ++l) {
                task.segs.push_back(Segment::joukowski(s, levels[l - 1], levels[l], t, t));
                task.meta.push_back(Node{jouk(s, levels[l], t), j, levels[l], t, {}, {}});
            }
            rings.push_back(std::move(task));
        }
    }
    {
        double d = c.distance_to_slits(W.e);
        double r_out = 0.45 * d;
        for (int m = 0; m < angles; ++m) {
            cplx dir = std::polar(1.0, 2 * M_PI * (m + 0.5) / angles);
            cplx z = W.e + r_out * dir;
            int p = nearest(z, [&](const Node& nd) {
                return !crosses_slit(c, nd.z, z) && std::abs(nd.z - W.e) > 0.5 * r_out;
            });
            if (p < 0) continue;
            Task task;
            task.parent = p;
            task.stop_outside = true;
            task.segs.push_back(Segment::line(nodes_[p].z, z));
            task.meta.push_back(node(z));
            for (double r = r_out; r > 1e-13 * (1 + std::abs(W.e)); r /= 1.3) {
                task.segs.push_back(Segment::line(W.e + r * dir, W.e + r / 1.3 * dir));
                task.meta.push_back(node(W.e + r / 1.3 * dir));
            }
            rings.push_back(std::move(task));
        }
        double R_in = 1.1 * std::hypot(std::max(std::abs(xa), std::abs(xb)), Y);
        for (int m = 0; m < angles; ++m) {
            cplx dir = std::polar(1.0, 2 * M_PI * (m + 0.5) / angles);
            cplx z = R_in * dir;
            int p = nearest(z, [&](const Node& nd) { return !crosses_slit(c, nd.z, z); });
            if (p < 0) continue;
            Task task;
            task.parent = p;
            task.stop_outside = true;
            task.segs.push_back(Segment::line(nodes_[p].z, z));
            task.meta.push_back(node(z));
            for (double r = R_in; r < 1e12; r *= 1.3) {
                task.segs.push_back(Segment::line(r * dir, 1.3 * r * dir));
                task.meta.push_back(node(1.3 * r * dir));
            }
            rings.push_back(std::move(task));
        }
    }
    run(rings);

    nbx_ = static_cast<int>(std::ceil(1.0 / cell_));
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const Node& nd = nodes_[i];
        if (nd.X.x2 < lo_ - 0.5 || nd.X.x2 > hi_ + 0.5) continue;
        if (nd.chart < 0 && c.distance_to_slits(nd.z) < 1e-6) continue;
        int a = std::min(nbx_ - 1, static_cast<int>(wrap01(nd.X.x1) / cell_));
        int b = static_cast<int>(std::floor((nd.X.x2 - lo_) / cell_));
        buckets_[key(a, b)].push_back(static_cast<int>(i));
    }
}

std::optional<Vertex> Scatter::newton(const Node& sd, double T1, double T2) const {
    const WeierstrassData& W = im_.data();
    const auto& c = W.curve;
    const Tracker& T = im_.tracker();
    auto resid = [&](const TrackState& s) {
        MinkowskiVector X = im_.X(s);
        return Eigen::Vector2d(wrap_diff(X.x1 - T1), X.x2 - T2);
    };
    const double tol = 1e-12;
    if (sd.chart < 0) {
        cplx z = sd.z;
        TrackState s = sd.s;
        Eigen::Vector2d f = resid(s);
        for (int it = 0; it < 40; ++it) {
            if (f.norm() < tol) return make_vertex(im_, z, s);
            Eigen::Vector3cd Phi = W.Phi_coef(z, c.w_plus(z), s.lg, s.lf);
            Eigen::Matrix2d J;
            J << Phi[0].real(), -Phi[0].imag(), Phi[1].real(), -Phi[1].imag();
            Eigen::Vector2d d = J.fullPivLu().solve(-f);
            cplx dz(d[0], d[1]);
            bool moved = false;
            double lam = 1;
            for (int h = 0; h < 12; ++h, lam *= 0.5) {
                cplx zt = z + lam * dz;
                if (crosses_slit(c, sd.z, zt) || c.distance_to_slits(zt) < 1e-10) continue;
                TrackState st = T.advance(sd.s, Segment::line(sd.z, zt));
                Eigen::Vector2d ft = resid(st);
                if (ft.norm() < f.norm()) {
                    z = zt;
                    s = st;
                    f = ft;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        if (f.norm() < 10 * tol) return make_vertex(im_, z, s);
        return std::nullopt;
    }
    Slit sl = c.slit(sd.chart);
    double rho = sd.rho, t = sd.t;
    TrackState s = sd.s;
    Eigen::Vector2d f = resid(s);
    for (int it = 0; it < 40; ++it) {
        if (f.norm() < tol) return make_vertex(im_, jouk(sl, rho, t), s);
        cplx z = jouk(sl, rho, t);
        Eigen::Vector3cd Phi = W.Phi_coef(z, c.w_plus(z), s.lg, s.lf);
        cplx zr = jouk_drho(sl, rho, t), zt = cplx(0, 1) * zr;
        Eigen::Matrix2d J;
        J << (Phi[0] * zr).real(), (Phi[0] * zt).real(), (Phi[1] * zr).real(), (Phi[1] * zt).real();
        Eigen::Vector2d d = J.fullPivLu().solve(-f);
        bool moved = false;
        double lam = 1;
        for (int h = 0; h < 12; ++h, lam *= 0.5) {
            double rn = rho + lam * d[0], tn = t + lam * d[1];
            if (rn <= 0) rn = 0.25 * rho;
            if (rn > 4 * sd.rho + 0.5) continue;
            TrackState st = T.advance(sd.s, Segment::joukowski(sl, sd.rho, rn, sd.t, tn));
            Eigen::Vector2d ft = resid(st);
            if (ft.norm() < f.norm()) {
                rho = rn;
                t = tn;
                s = st;
                f = ft;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    if (f.norm() < 10 * tol) return make_vertex(im_, jouk(sl, rho, t), s);
    return std::nullopt;
}

std::optional<Vertex> Scatter::invert(double x1, double x2) const {
    x1 = wrap01(x1);
    int a0 = std::min(nbx_ - 1, static_cast<int>(x1 / cell_));
    int b0 = static_cast<int>(std::floor((x2 - lo_) / cell_));
    std::vector<std::pair<double, int>> cand;
    for (int rad = 1; rad <= 8 && cand.size() < 6; ++rad) {
        cand.clear();
        for (int da = -rad; da <= rad; ++da)
            for (int db = -rad; db <= rad; ++db) {
                int a = ((a0 + da) % nbx_ + nbx_) % nbx_;
                auto it = buckets_.find(key(a, b0 + db));
                if (it == buckets_.end()) continue;
                for (int i : it->second) {
                    const Node& nd = nodes_[i];
                    cand.push_back({std::hypot(wrap_diff(nd.X.x1 - x1), nd.X.x2 - x2), i});
                }
            }
    }
    std::sort(cand.begin(), cand.end());
    for (size_t k = 0; k < cand.size() && k < 10; ++k) {
        auto v = newton(nodes_[cand[k].second], x1, x2);
        if (v) return v;
    }
    return std::nullopt;
}

}  // namespace

MinkowskiVector tangent_normal(const Eigen::Vector3cd& Phi) {
    MinkowskiVector Xx{Phi[0].real(), Phi[1].real(), Phi[2].real()};
    MinkowskiVector Xy{-Phi[0].imag(), -Phi[1].imag(), -Phi[2].imag()};
    MinkowskiVector n = domain::lorentz_cross(Xx, Xy);
    double q = -domain::minkowski_inner(n, n);
    if (q <= 0) return {0, 0, 0};
    return n * (1 / std::sqrt(q));
}

Immersion::Immersion(const WeierstrassData& W, double tol) : W_(W), T_(W, tol) {}

MinkowskiVector Immersion::X(const TrackState& s) const {
    return {W_.q0.x1 + s.I[0].real(), W_.q0.x2 + s.I[1].real(), W_.q0.x3 + s.I[2].real()};
}

std::vector<TrackState> Immersion::walk(TrackState s, const Segment& seg, int pieces) const {
    std::vector<TrackState> out;
    out.reserve(pieces);
    for (int k = 0; k < pieces; ++k) {
        s = T_.advance(s, seg, static_cast<double>(k) / pieces, static_cast<double>(k + 1) / pieces);
        out.push_back(s);
    }
    return out;
}

SlitImage slit_image(const Immersion& im, int j, int samples) {
    Slit s = im.data().curve.slit(j);
    SlitImage out;
    out.q = j == 0 ? im.data().q0 : im.at(CurvePoint::on_slit(s.mid(), 1));
    for (int k = 0; k < samples; ++k) {
        double t = 0.5 * (1 - std::cos(M_PI * (k + 0.5) / samples));
        for (int side : {1, -1}) {
            MinkowskiVector X = im.at(CurvePoint::on_slit(s.a + (s.b - s.a) * t, side));
            out.spread = std::max(out.spread, lattice_distance(X, out.q));
        }
    }
    out.q.x1 = wrap01(out.q.x1);
    return out;
}

Mark extract_mark(const Immersion& im, int samples) {
    Mark m;
    int count = im.data().curve.slit_count();
    m.q.resize(count);
    m.spread.resize(count);
    parallel_for(count, 0, [&](int j) {
        SlitImage si = slit_image(im, j, samples);
        m.q[j] = si.q;
        m.spread[j] = si.spread;
    });
    m.eps0 = im.data().eps0;
    return m;
}

PeriodReport period_closure(const Immersion& im, const Mark& mark) {
    const WeierstrassData& W = im.data();
    const Tracker& T = im.tracker();
    const auto& c = W.curve;
    PeriodReport rep;
    auto make = [&](const std::string& name, const curve::ContourPath& path) {
        Eigen::Vector3cd v = weierstrass::cycle_integral(T, path);
        Cycle cy;
        cy.name = name;
        cy.re = {v[0].real(), v[1].real(), v[2].real()};
        cy.flux = {v[0].imag(), v[1].imag(), v[2].imag()};
        cy.causal = domain::classify(cy.flux, 1e-9);
        cy.closure = lattice_distance(cy.re, {0, 0, 0});
        return cy;
    };
    for (int i = 0; i < c.slit_count(); ++i) rep.cycles.push_back(make("a" + std::to_string(i), weierstrass::a_loop(W, i)));
    rep.cycles.push_back(make("e", weierstrass::e_loop(W)));
    for (const Cycle& cy : rep.cycles) rep.closure = std::max(rep.closure, cy.closure);
    rep.e_translation = rep.cycles.back().re.x1;

    std::vector<cplx> obst = W.obstacles(Sheet::plus), om = W.obstacles(Sheet::minus);
    obst.insert(obst.end(), om.begin(), om.end());
    obst.push_back(W.e);
    for (int j = 1; j <= c.genus(); ++j) {
        double best = -1;
        curve::ContourPath path;
        for (double bulge : {1.0, 0.6, 1.5, 0.4, 2.2, 0.25, 3.0}) {
            homology::Cycle b = homology::b_cycle(c, j, bulge);
            double cl = curve::path_clearance(b.path, obst);
            if (cl > best) {
                best = cl;
                path = b.path;
            }
        }
        Cycle cb = make("b" + std::to_string(j), path);
        MinkowskiVector twice = (mark.q[j] - mark.q[0]) * 2.0;
        twice.x1 = 2 * wrap_diff(mark.q[j].x1 - mark.q[0].x1);
        rep.b_identity.push_back(lattice_distance(cb.re, twice));
    }
    return rep;
}

EndData end_data(const Immersion& im, int angles) {
    const WeierstrassData& W = im.data();
    const auto& c = W.curve;
    EndData ed;
    auto ring = [&](cplx center, double r, const std::function<double(const MinkowskiVector&)>& h) {
        TrackState s = im.state(CurvePoint::at(center + r, Sheet::plus));
        std::vector<double> out;
        for (const TrackState& t : im.walk(s, Segment::arc(center, r, r, 0, 2 * M_PI, Sheet::plus), angles))
            out.push_back(h(im.X(t)));
        return out;
    };
    // E1: the end at e, where g = 0; the height is x3
    double d = c.distance_to_slits(W.e);
    for (cplx o : W.obstacles(Sheet::plus))
        if (std::abs(o - W.e) > 1e-12) d = std::min(d, std::abs(o - W.e));
    ed.e1.name = "E1";
    ed.e1.normal = domain::stereographic(0.0);
    auto h1 = [](const MinkowskiVector& X) { return X.x3; };
    std::vector<std::vector<double>> hs(4);
    parallel_for(4, 0, [&](int k) { hs[k] = ring(W.e, 0.3 * d / std::pow(2.0, k), h1); });
    // E2: the end at infinity; the height is measured along the limit normal
    cplx ginf = W.g_infinity();
    ed.c = ginf.real();
    ed.e2.name = "E2";
    ed.e2.normal = domain::stereographic(ginf);
    MinkowskiVector N = ed.e2.normal;
    auto h2 = [N](const MinkowskiVector& X) { return domain::minkowski_inner(X, N); };
    double R0 = 2 * (std::max(std::abs(c.left_end()), std::abs(c.right_end())) + 1);
    for (cplx o : W.obstacles(Sheet::plus)) R0 = std::max(R0, 2 * std::abs(o) + 1);
    std::vector<std::vector<double>> hf(4);
    parallel_for(4, 0, [&](int k) { hf[k] = ring(0.0, R0 * std::pow(2.0, k), h2); });

    auto summarize = [&](End& end, const std::vector<std::vector<double>>& h, double base, double factor) {
        // the mean over a circle is the limit value for a bounded harmonic height
        double lim = 0;
        for (double v : h.back()) lim += v;
        lim /= h.back().size();
        end.height = lim;
        for (size_t k = 0; k + 1 < h.size(); ++k) {
            EndRing r{base * std::pow(factor, static_cast<double>(k)), 0, 0};
            for (double v : h[k]) {
                r.residual = std::max(r.residual, std::abs(v - lim));
                r.mean += v / h[k].size();
            }
            end.rings.push_back(r);
        }
        end.monotone = true;
        for (size_t k = 1; k < end.rings.size(); ++k)
            if (!(end.rings[k].residual < end.rings[k - 1].residual)) end.monotone = false;
    };
    summarize(ed.e1, hs, 0.3 * d, 0.5);
    summarize(ed.e2, hf, R0, 2.0);
    return ed;
}

std::vector<ConeReport> cone_asymptotics(const Immersion& im, const Mark& mark, const std::vector<double>& radii,
                                         int angles) {
    const WeierstrassData& W = im.data();
    const auto& c = W.curve;
    std::vector<ConeReport> out(c.slit_count());
    parallel_for(c.slit_count(), 0, [&](int j) {
        Slit s = c.slit(j);
        const MinkowskiVector& q = mark.q[j];
        double rho_max = safe_rho(W, j, 0.9);
        auto ring = [&](double rho) {
            Segment seg = Segment::joukowski(s, rho, rho, M_PI / 2, M_PI / 2 + 2 * M_PI);
            TrackState st = im.state(CurvePoint::at(seg.start(), Sheet::plus));
            ConeRing r{0, 0, 0, 0};
            double lo = 1e300, hi = -1e300;
            for (const TrackState& t : im.walk(st, seg, angles)) {
                MinkowskiVector X = im.X(t);
                double dh = horizontal_distance(X, q);
                double sl = std::abs(X.x3 - q.x3) / dh;
                r.r += dh / angles;
                r.slope += sl / angles;
                r.grad += grad_from_g(W.g_of_log(t.lg)) / angles;
                lo = std::min(lo, sl);
                hi = std::max(hi, sl);
            }
            r.spread = hi - lo;
            return r;
        };
        ConeReport rep;
        rep.j = j;
        double rho = 0.05;
        for (double target : radii) {
            ConeRing r = ring(rho);
            for (int it = 0; it < 12 && std::abs(r.r / target - 1) > 1e-3; ++it) {
                rho = std::min(rho_max, rho * target / r.r);
                r = ring(rho);
            }
            rep.rings.push_back(r);
        }
        rep.slope_increasing = rep.grad_increasing = true;
        for (size_t k = 1; k < rep.rings.size(); ++k) {
            if (!(rep.rings[k].slope > rep.rings[k - 1].slope)) rep.slope_increasing = false;
            if (!(rep.rings[k].grad > rep.rings[k - 1].grad)) rep.grad_increasing = false;
        }
        out[j] = rep;
    });
    return out;
}

namespace {

struct Window {
    double lo, hi;
};

Window mesh_window(const Mark& mark, double margin) {
    double qlo = 1e300, qhi = -1e300;
    for (const auto& q : mark.q) {
        qlo = std::min(qlo, q.x2);
        qhi = std::max(qhi, q.x2);
    }
    // aligned to a coarse lattice so that refined grids are nested
    return {std::floor((qlo - margin) * 10) / 10, std::ceil((qhi + margin) * 10) / 10};
}

}  // namespace

MaximalGraphMesh integrate_immersion(const Immersion& im, const Mark& mark, const MeshSpec& spec) {
    MaximalGraphMesh m;
    Window win = mesh_window(mark, spec.x2_margin);
    m.h = spec.h;
    m.nx = static_cast<int>(std::lround(1.0 / spec.h));
    if (std::abs(m.nx * spec.h - 1) > 1e-12) throw ValidationError("mesh spacing must divide the period 1");
    m.x2lo = win.lo;
    m.ny = static_cast<int>(std::lround((win.hi - win.lo) / spec.h)) + 1;
    Scatter S(im, win.lo, win.hi, spec.ring_angles, spec.threads);
    m.scatter_nodes = static_cast<int>(S.nodes().size());
    m.vertices.assign(static_cast<size_t>(m.nx) * m.ny, Vertex{});
    parallel_for(m.ny, spec.threads, [&](int j) {
        for (int i = 0; i < m.nx; ++i) {
            auto v = S.invert(i * m.h, m.x2lo + j * m.h);
            if (v) m.vertices[j * m.nx + i] = *v;
        }
    });
    for (const Vertex& v : m.vertices) {
        if (!v.valid) {
            ++m.holes;
            continue;
        }
        if (v.singular) ++m.singular;
        m.max_normal_defect = std::max(m.max_normal_defect, v.normal_defect);
    }
    auto unwrapped = [&](int i, int j) { return i * m.h + wrap_diff(m.at(i, j).X.x1 - i * m.h); };
    for (int j = 0; j + 1 < m.ny; ++j)
        for (int i = 0; i < m.nx; ++i) {
            int a = j * m.nx + i, b = j * m.nx + (i + 1) % m.nx, cc = (j + 1) * m.nx + (i + 1) % m.nx,
                d = (j + 1) * m.nx + i;
            if (!(m.vertices[a].valid && m.vertices[b].valid && m.vertices[cc].valid && m.vertices[d].valid)) continue;
            m.faces.push_back({a, b, cc});
            m.faces.push_back({a, cc, d});
            double xs[4] = {unwrapped(i, j), unwrapped(i + 1, j), unwrapped(i + 1, j + 1), unwrapped(i, j + 1)};
            for (int k = 0; k < 4; ++k)
                for (int l = 0; l < 4; ++l) m.wrap_jump = std::max(m.wrap_jump, std::abs(xs[k] - xs[l]));
        }

    // independent paths from the basepoint on a vertex subset
    std::vector<int> pick;
    int stride = std::max<int>(1, static_cast<int>(m.vertices.size()) / 40);
    for (size_t k = 0; k < m.vertices.size(); k += stride)
        if (m.vertices[k].valid) pick.push_back(static_cast<int>(k));
    std::vector<double> rd(pick.size());
    parallel_for(static_cast<int>(pick.size()), spec.threads, [&](int k) {
        const Vertex& v = m.vertices[pick[k]];
        rd[k] = lattice_distance(im.at(v.p), v.X);
    });
    for (double r : rd) m.recheck_defect = std::max(m.recheck_defect, r);

    // graph property: scatter samples against the bilinear interpolant
    for (const Node& nd : S.nodes()) {
        double x1 = wrap01(nd.X.x1), x2 = nd.X.x2;
        if (x2 < m.x2lo + 2 * m.h || x2 > m.x2lo + (m.ny - 3) * m.h) continue;
        if (distance_to_marks(x1, x2, mark) < spec.cone_exclusion) continue;
        int i0 = static_cast<int>(std::floor(x1 / m.h)), j0 = static_cast<int>(std::floor((x2 - m.x2lo) / m.h));
        double a = x1 / m.h - i0, b = (x2 - m.x2lo) / m.h - j0;
        bool ok = true;
        for (int di = -1; di <= 2; ++di)
            for (int dj = -1; dj <= 2; ++dj) ok = ok && m.at(i0 + di, j0 + dj).valid;
        if (!ok) continue;
        double u = (1 - a) * (1 - b) * m.u(i0, j0) + a * (1 - b) * m.u(i0 + 1, j0) + a * b * m.u(i0 + 1, j0 + 1) +
                   (1 - a) * b * m.u(i0, j0 + 1);
        double est = 0;
        for (int di = 0; di <= 1; ++di)
            for (int dj = 0; dj <= 1; ++dj) {
                int i = i0 + di, j = j0 + dj;
                est = std::max(est, (std::abs(m.u(i + 1, j) - 2 * m.u(i, j) + m.u(i - 1, j)) +
                                     std::abs(m.u(i, j + 1) - 2 * m.u(i, j) + m.u(i, j - 1))) / 8);
            }
        m.graph_defect = std::max(m.graph_defect, std::max(0.0, std::abs(u - nd.X.x3) - 2 * est - 1e-9));
    }
    return m;
}

double pde_stencil(const std::function<double(int, int)>& u, int i, int j, double h) {
    double c = u(i, j);
    double u1 = (u(i + 1, j) - u(i - 1, j)) / (2 * h), u2 = (u(i, j + 1) - u(i, j - 1)) / (2 * h);
    double u11 = (u(i + 1, j) - 2 * c + u(i - 1, j)) / (h * h);
    double u22 = (u(i, j + 1) - 2 * c + u(i, j - 1)) / (h * h);
    double u12 = (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1)) / (4 * h * h);
    return (1 - u1 * u1) * u22 + 2 * u1 * u2 * u12 + (1 - u2 * u2) * u11;
}

namespace {

bool stencil_ok(const MaximalGraphMesh& m, int i, int j) {
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            if (!m.at(i + di, j + dj).valid) return false;
    return true;
}

}  // namespace

PdeReport pde_residual(const MaximalGraphMesh& m, const Mark& mark, double exclusion) {
    PdeReport r;
    r.h = m.h;
    auto u = [&](int i, int j) { return m.u(i, j); };
    for (int j = 1; j + 1 < m.ny; ++j)
        for (int i = 0; i < m.nx; ++i) {
            if (distance_to_marks(i * m.h, m.x2lo + j * m.h, mark) <= exclusion) continue;
            if (!stencil_ok(m, i, j)) continue;
            r.sup = std::max(r.sup, std::abs(pde_stencil(u, i, j, m.h)));
            ++r.nodes;
        }
    return r;
}

SpacelikeReport spacelike_check(const MaximalGraphMesh& m, const Mark& mark, double exclusion) {
    SpacelikeReport r;
    for (int j = 1; j + 1 < m.ny; ++j)
        for (int i = 0; i < m.nx; ++i) {
            if (distance_to_marks(i * m.h, m.x2lo + j * m.h, mark) <= exclusion) continue;
            if (!stencil_ok(m, i, j)) continue;
            double g = grad_from_g(m.at(i, j).g);
            double u1 = (m.u(i + 1, j) - m.u(i - 1, j)) / (2 * m.h), u2 = (m.u(i, j + 1) - m.u(i, j - 1)) / (2 * m.h);
            r.max_grad = std::max(r.max_grad, g);
            r.fd_agreement = std::max(r.fd_agreement, std::abs(std::hypot(u1, u2) - g));
            ++r.nodes;
        }
    r.margin = 1 - r.max_grad;
    return r;
}

S2Point s2_point(const ModuliParams& p, const std::vector<cplx>& seed) {
    S2Point out;
    try {
        curve::RealHyperellipticCurve c(p.branch);
        auto pd = homology::dual_basis_and_periods(c, homology::build_basis(c));
        jacobian::AbelMap abel(c, pd);
        auto sys = jacobian::spinor_sections(abel, p.e);
        jacobian::SolveOptions so;
        so.seed = seed;
        auto sol = jacobian::solve_divisor(abel, sys, p.section, p.e, so);
        if (!sol.admissible) {
            out.note = "section " + std::to_string(p.section) + ": " + sol.note;
            return out;
        }
        for (auto& [pt, mult] : sol.divisor.points)
            for (int k = 0; k < mult; ++k) out.divisor.push_back(pt.z);
        WeierstrassData W = weierstrass::build(c, pd, sol.divisor, p.e, p.eps0, p.q0, {1e-7, 1e-11, 20});
        Immersion im(W);
        Mark mk = extract_mark(im, 4);
        for (const auto& q : mk.q) {
            out.coords.push_back(q.x1);
            out.coords.push_back(q.x2);
            out.coords.push_back(q.x3);
        }
        out.coords.push_back(W.g_infinity().real());
        out.ok = true;
    } catch (const std::exception& e) {
        out.note = e.what();
    }
    return out;
}

S2Jacobian s2_jacobian(const ModuliParams& p, double step, double rank_tol) {
    S2Jacobian J;
    J.base = s2_point(p);
    if (!J.base.ok) return J;
    int n = static_cast<int>(p.branch.size()) / 2 - 1;
    int np = 2 * n + 5;
    for (int k = 0; k < 2 * n + 1; ++k) J.parameters.push_back("c" + std::to_string(k + 1));
    J.parameters.insert(J.parameters.end(), {"im_e", "q0_x1", "q0_x2", "q0_x3"});
    auto perturbed = [&](int k, double s) {
        ModuliParams q = p;
        if (k < 2 * n + 1)
            q.branch[k] += s;
        else if (k == 2 * n + 1)
            q.e += cplx(0, s);
        else if (k == 2 * n + 2)
            q.q0.x1 += s;
        else if (k == 2 * n + 3)
            q.q0.x2 += s;
        else
            q.q0.x3 += s;
        return q;
    };
    int rows = static_cast<int>(J.base.coords.size());
    J.J = Eigen::MatrixXd::Zero(rows, np);
    std::vector<S2Point> plus(np), minus(np);
    parallel_for(2 * np, 0, [&](int t) {
        int k = t / 2;
        double s = (t % 2 == 0) ? step : -step;
        S2Point r = s2_point(perturbed(k, s), J.base.divisor);
        (t % 2 == 0 ? plus : minus)[k] = r;
    });
    for (int k = 0; k < np; ++k) {
        if (!plus[k].ok || !minus[k].ok) {
            J.base.ok = false;
            J.base.note = "perturbation failed for " + J.parameters[k];
            return J;
        }
        for (int r = 0; r < rows; ++r) {
            double d = plus[k].coords[r] - minus[k].coords[r];
            if (r % 3 == 0 && r + 1 < rows) d = wrap_diff(d);
            J.J(r, k) = d / (2 * step);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J.J);
    J.singular = svd.singularValues();
    for (int k = 0; k < J.singular.size(); ++k)
        if (J.singular[k] > rank_tol * J.singular[0]) ++J.rank;
    return J;
}

ConvergenceReport convergence_demo(const ModuliParams& p0, const std::vector<double>& direction, double delta0,
                                   int steps, int window) {
    ConvergenceReport rep;
    struct Sample {
        std::vector<double> u;
        Mark mark;
    };
    std::vector<double> px, py;
    auto evaluate = [&](const ModuliParams& p, std::vector<cplx>& seed, bool define_window) {
        curve::RealHyperellipticCurve c(p.branch);
        auto pd = homology::dual_basis_and_periods(c, homology::build_basis(c));
        jacobian::AbelMap abel(c, pd);
        auto sys = jacobian::spinor_sections(abel, p.e);
        jacobian::SolveOptions so;
        so.seed = seed;
        auto sol = jacobian::solve_divisor(abel, sys, p.section, p.e, so);
        if (!sol.admissible) throw ObstructionError("convergence demo: divisor not admissible", sol.residual);
        seed.clear();
        for (auto& [pt, mult] : sol.divisor.points) seed.push_back(pt.z);
        WeierstrassData W = weierstrass::build(c, pd, sol.divisor, p.e, p.eps0, p.q0, {1e-7, 1e-11, 20});
        Immersion im(W);
        Sample s;
        s.mark = extract_mark(im, 4);
        if (define_window) {
            double lo = 1e300, hi = -1e300;
            for (const auto& q : s.mark.q) {
                lo = std::min(lo, q.x2);
                hi = std::max(hi, q.x2);
            }
            lo -= 0.3;
            hi += 0.3;
            for (int a = 0; a < window; ++a)
                for (int b = 0; b < window; ++b) {
                    px.push_back((a + 0.5) / window);
                    py.push_back(lo + (hi - lo) * b / (window - 1));
                }
        }
        double lo = *std::min_element(py.begin(), py.end()), hi = *std::max_element(py.begin(), py.end());
        Scatter S(im, lo - 0.3, hi + 0.3, 32, 0);
        s.u.assign(px.size(), std::nan(""));
        parallel_for(static_cast<int>(px.size()), 0, [&](int k) {
            auto v = S.invert(px[k], py[k]);
            if (v) s.u[k] = v->X.x3;
        });
        return s;
    };
    std::vector<cplx> seed;
    Sample limit = evaluate(p0, seed, true);
    std::vector<cplx> seed0 = seed;
    for (int k = 1; k <= steps; ++k) {
        ModuliParams p = p0;
        double t = delta0 / std::pow(2.0, k - 1);
        for (size_t i = 0; i < p.branch.size() && i < direction.size(); ++i) p.branch[i] += t * direction[i];
        std::vector<cplx> sd = seed0;
        Sample s = evaluate(p, sd, false);
        ConvergenceRow row{k, t, 0, 0};
        for (size_t i = 0; i < px.size(); ++i) {
            if (std::isnan(s.u[i]) || std::isnan(limit.u[i])) {
                row.sup_error = std::numeric_limits<double>::infinity();
                continue;
            }
            row.sup_error = std::max(row.sup_error, std::abs(s.u[i] - limit.u[i]));
        }
        for (size_t j = 0; j < s.mark.q.size(); ++j) row.mark_error = std::max(row.mark_error, lattice_distance(s.mark.q[j], limit.mark.q[j]));
        rep.rows.push_back(row);
    }
    rep.monotone = rep.marks_converge = true;
    for (size_t k = 1; k < rep.rows.size(); ++k) {
        if (!(rep.rows[k].sup_error < rep.rows[k - 1].sup_error)) rep.monotone = false;
        if (!(rep.rows[k].mark_error < rep.rows[k - 1].mark_error)) rep.marks_converge = false;
    }
    return rep;
}

namespace catenoid {

MinkowskiVector X(double c, cplx z) {
    cplx a = cplx(0, 0.5 * c) * (-1.0 / z - z);
    cplx b = -0.5 * c * (z - 1.0 / z);
    return {a.real(), b.real(), c * std::log(std::abs(z))};
}

double profile(double c, double rho) { return c * std::asinh(rho / c); }

namespace {

// X by quadrature of the Weierstrass data g = z, phi3 = c dz/z along 1 -> r -> r e^{i theta}.
MinkowskiVector integrated(double c, double r, double theta) {
    auto Phi = [c](cplx z) {
        cplx g = z, p3 = c / z;
        return Eigen::Vector3cd(0.5 * cplx(0, 1) * (1.0 / g - g) * p3, -0.5 * (1.0 / g + g) * p3, p3);
    };
    const quad::Rule& rule = quad::gauss_legendre(20);
    Eigen::Vector3cd I = Eigen::Vector3cd::Zero();
    // radial leg in log r, angular leg in theta, each split into short panels
    double lr = std::log(r);
    int pr = std::max(1, static_cast<int>(std::ceil(std::abs(lr))));
    for (int p = 0; p < pr; ++p)
        for (size_t k = 0; k < rule.x.size(); ++k) {
            double s = lr * (p + rule.x[k]) / pr;
            cplx z = std::exp(s);
            I += rule.w[k] * (lr / pr) * Phi(z) * z;
        }
    int pa = std::max(1, static_cast<int>(std::ceil(std::abs(theta))));
    for (int p = 0; p < pa; ++p)
        for (size_t k = 0; k < rule.x.size(); ++k) {
            double t = theta * (p + rule.x[k]) / pa;
            cplx z = std::polar(r, t);
            I += rule.w[k] * (theta / pa) * Phi(z) * cplx(0, 1) * z;
        }
    return {I[0].real(), I[1].real(), I[2].real()};
}

}  // namespace

Surface build(const Spec& s) {
    Surface S;
    S.h = s.h;
    S.n = static_cast<int>(std::lround(2 * s.half_width / s.h)) + 1;
    S.x0 = -s.half_width;
    S.z.resize(static_cast<size_t>(S.n) * S.n);
    S.X.resize(S.z.size());
    parallel_for(S.n, 0, [&](int j) {
        for (int i = 0; i < S.n; ++i) {
            double x1 = S.x0 + i * S.h, x2 = S.x0 + j * S.h;
            double rho = std::hypot(x1, x2);
            // invert x1 = (c/2)(r - 1/r) sin t, x2 = -(c/2)(r - 1/r) cos t
            double q = rho / s.c;
            double r = q + std::sqrt(q * q + 1);
            double t = rho > 0 ? std::atan2(x1, -x2) : 0.0;
            size_t k = static_cast<size_t>(j) * S.n + i;
            S.z[k] = std::polar(r, t);
            S.X[k] = integrated(s.c, r, t);
        }
    });
    return S;
}

Report diagnose(const Spec& s, const Surface& S) {
    Report rep;
    int n = S.n;
    auto u = [&](int i, int j) { return S.X[static_cast<size_t>(j) * n + i].x3; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const MinkowskiVector& X = S.X[static_cast<size_t>(j) * n + i];
            double rho = std::hypot(X.x1, X.x2);
            rep.profile_defect = std::max(rep.profile_defect, std::abs(rho - s.c * std::sinh(X.x3 / s.c)));
            double g = grad_from_g(S.z[static_cast<size_t>(j) * n + i]);
            rep.gradient_defect = std::max(rep.gradient_defect, std::abs(g - 1 / std::sqrt(1 + rho * rho / (s.c * s.c))));
            rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(u(i, j) - u(j, n - 1 - i)));
            if (i == 0 || j == 0 || i == n - 1 || j == n - 1) continue;
            double x1 = S.x0 + i * S.h, x2 = S.x0 + j * S.h;
            if (std::hypot(x1, x2) <= s.exclusion) continue;
            rep.pde_sup = std::max(rep.pde_sup, std::abs(pde_stencil(u, i, j, S.h)));
            rep.max_grad = std::max(rep.max_grad, g);
            ++rep.nodes;
        }
    // slope of the cone at horizontal radius 1e-2
    double acc = 0;
    const int M = 64;
    for (int k = 0; k < M; ++k) {
        double t = 2 * M_PI * (k + 0.5) / M, rho = 1e-2;
        double q = rho / s.c, r = q + std::sqrt(q * q + 1);
        MinkowskiVector X = integrated(s.c, r, t);
        acc += X.x3 / std::hypot(X.x1, X.x2) / M;
    }
    rep.slope = acc;
    auto zero = [](int, int) { return 0.0; };
    rep.planar_residual = std::abs(pde_stencil(zero, 1, 1, s.h));
    return rep;
}

}  // namespace catenoid

}  // namespace maxperiodic::surface
