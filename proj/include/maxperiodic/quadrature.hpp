#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "maxperiodic/errors.hpp"

namespace maxperiodic::quad {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

struct Rule {
    std::vector<double> x;  // nodes on [0,1]
    std::vector<double> w;  // weights on [0,1]
};

// Gauss-Legendre rule of the given order mapped to [0,1]; cached per order.
const Rule& gauss_legendre(int order);

// Integration matrix S with  int_0^{x_i} f ~ sum_k S(i,k) f(x_k)  on the nodes of gauss_legendre(order).
const Eigen::MatrixXd& integration_matrix(int order);

struct Options {
    double tol = 1e-10;
    int order = 20;
    int max_depth = 40;
};

namespace detail {
inline double size_of(const cplx& v) { return std::abs(v); }
inline double size_of(const CVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
}  // namespace detail

// Adaptive Gauss-Legendre on [a,b] for a complex scalar or vector integrand.
// The error estimate compares one panel against its two halves.  `err` accumulates.
template <class F, class V = std::invoke_result_t<F, double>>
V adaptive(const F& f, double a, double b, const Options& opt, double& err) {
    const Rule& r = gauss_legendre(opt.order);
    auto panel = [&](double lo, double hi) {
        double h = hi - lo;
        V acc = f(lo + h * r.x[0]) * (r.w[0] * h);
        for (size_t i = 1; i < r.x.size(); ++i) acc += f(lo + h * r.x[i]) * (r.w[i] * h);
        return acc;
    };
    struct Item { double lo, hi; V whole; int depth; };
    std::vector<Item> stack;
    stack.push_back({a, b, panel(a, b), 0});
    V total = stack.back().whole * 0.0;
    double span = b - a;
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        double mid = 0.5 * (it.lo + it.hi);
        V left = panel(it.lo, mid), right = panel(mid, it.hi);
        V both = left + right;
        double e = detail::size_of(V(both - it.whole));
        double budget = opt.tol * (it.hi - it.lo) / span;
        if (e <= budget || e <= 1e-15 * detail::size_of(both)) {
            total += both;
            err += e;
        } else if (it.depth >= opt.max_depth) {
            throw QuadratureError("adaptive quadrature: tolerance not reached (estimate " + std::to_string(e) + ")");
        } else {
            stack.push_back({mid, it.hi, std::move(right), it.depth + 1});
            stack.push_back({it.lo, mid, std::move(left), it.depth + 1});
        }
    }
    return total;
}

template <class F, class V = std::invoke_result_t<F, double>>
V adaptive(const F& f, double a, double b, const Options& opt = {}) {
    double err = 0;
    return adaptive(f, a, b, opt, err);
}

// Endpoint maps on [0,1] that absorb inverse square-root singularities.  `rest` is 1 - t computed
// without cancellation, so offsets from either end stay accurate close to the end.
enum class Ends { none, start, end, both };
inline void endpoint_map(Ends e, double s, double& t, double& dt, double& rest) {
    switch (e) {
        case Ends::none: t = s; dt = 1; rest = 1 - s; return;
        case Ends::start: t = s * s; dt = 2 * s; rest = (1 - s) * (1 + s); return;
        case Ends::end: rest = (1 - s) * (1 - s); t = 1 - rest; dt = 2 * (1 - s); return;
        case Ends::both: {
            double a = std::sin(0.5 * M_PI * s), b = std::cos(0.5 * M_PI * s);
            t = a * a;
            rest = b * b;
            dt = M_PI * a * b;
            return;
        }
    }
}
inline void endpoint_map(Ends e, double s, double& t, double& dt) {
    double rest;
    endpoint_map(e, s, t, dt, rest);
}

}  // namespace maxperiodic::quad
