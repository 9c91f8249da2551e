#include "maxperiodic/quadrature.hpp"

#include <map>
#include <mutex>

namespace maxperiodic::quad {

namespace {

Rule build_rule(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        r.x[n - 1 - i] = 0.5 * (x + 1);
        r.w[n - 1 - i] = 1.0 / ((1 - x * x) * dp * dp);
    }
    return r;
}

Eigen::MatrixXd build_matrix(int n) {
    const Rule& r = gauss_legendre(n);
    // Lagrange basis on the nodes, integrated exactly with the same rule after rescaling.
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i) {
        double xi = r.x[i];
        for (int k = 0; k < n; ++k) {
            double acc = 0;
            for (int q = 0; q < n; ++q) {
                double t = xi * r.x[q];
                double l = 1;
                for (int m = 0; m < n; ++m)
                    if (m != k) l *= (t - r.x[m]) / (r.x[k] - r.x[m]);
                acc += r.w[q] * l;
            }
            S(i, k) = acc * xi;
        }
    }
    return S;
}

std::mutex cache_mutex;

}  // namespace

const Rule& gauss_legendre(int order) {
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
    return it->second;
}

const Eigen::MatrixXd& integration_matrix(int order) {
    static std::map<int, Eigen::MatrixXd> cache;
    static std::mutex matrix_mutex;
    std::lock_guard<std::mutex> lock(matrix_mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_matrix(order)).first;
    return it->second;
}

}  // namespace maxperiodic::quad
