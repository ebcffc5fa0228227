#pragma once

// Gauss-Legendre rules on [-1,1].  Nodes are Legendre roots found by Newton
// iteration from the Chebyshev-like initial guess; weights from the standard
// derivative formula.  Rules are cached per order.

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace glvx {

struct QuadRule {
    std::vector<double> x; // nodes in (-1,1), ascending
    std::vector<double> w; // positive weights
};

inline QuadRule make_gauss_legendre(int n) {
    QuadRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence: p2 = P_n(x), dp = P_n'(x)
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[n - 1 - i] = x;
        rule.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

// Integrates fn over [a,b] with an n-point Gauss-Legendre rule.
template <class F>
double gauss_integrate(F&& fn, double a, double b, int n) {
    const QuadRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a), s = 0.0;
    for (int i = 0; i < n; ++i) s += r.w[i] * fn(mid + half * r.x[i]);
    return s * half;
}

} // namespace glvx
