#pragma once

// Small dense least-squares fits used by the decay-rate and asymptotics
// diagnostics.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace glvx {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
};

// Least-squares line y = intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need two or more paired samples");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-30)
        throw std::invalid_argument("linear_fit: degenerate abscissae");
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

struct ExpPowerFit {
    double log_c = 0.0;
    double rate = 0.0;  // y ~ c * exp(-rate * x) * x^power
    double power = 0.0;
};

// Fits log y_i = log_c - rate * x_i + power * log x_i by normal equations.
inline ExpPowerFit exp_power_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("exp_power_fit: need three or more paired samples");
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rhs{};
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("exp_power_fit: samples must be positive");
        std::array<double, 3> basis = {1.0, -x[i], std::log(x[i])};
        double ly = std::log(y[i]);
        for (int a = 0; a < 3; ++a) {
            rhs[a] += basis[a] * ly;
            for (int b = 0; b < 3; ++b) m[a][b] += basis[a] * basis[b];
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system
    std::array<int, 3> piv = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int rr = col + 1; rr < 3; ++rr)
            if (std::abs(m[piv[rr]][col]) > std::abs(m[piv[best]][col])) best = rr;
        std::swap(piv[col], piv[best]);
        double d = m[piv[col]][col];
        if (std::abs(d) < 1e-30) throw std::invalid_argument("exp_power_fit: singular normal matrix");
        for (int rr = col + 1; rr < 3; ++rr) {
            double fac = m[piv[rr]][col] / d;
            for (int cc = col; cc < 3; ++cc) m[piv[rr]][cc] -= fac * m[piv[col]][cc];
            rhs[piv[rr]] -= fac * rhs[piv[col]];
        }
    }
    std::array<double, 3> sol{};
    for (int col = 2; col >= 0; --col) {
        double s = rhs[piv[col]];
        for (int cc = col + 1; cc < 3; ++cc) s -= m[piv[col]][cc] * sol[cc];
        sol[col] = s / m[piv[col]][col];
    }
    return {sol[0], sol[1], sol[2]};
}

} // namespace glvx
