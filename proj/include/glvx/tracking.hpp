#pragma once
// Vortex detection and identity tracking on lattice fields.
//
// Detection is per plaquette: the principal-value phase circulation of psi
// around the four corners is an exact multiple of 2*pi (up to round-off), and
// a nonzero value marks an enclosed zero of psi.  The sub-grid position is the
// zero of the bilinear interpolant of the parallel-transported corner values
//
//     c0 = psi_0,   c1 = e^{-i h Ax} psi_1,   c3 = e^{-i h Ay} psi_3,
//     c2 = e^{-i h Ax(bottom)} e^{-i h Ay(right)} psi_2,
//
// which makes the reported position gauge-equivariant to round-off: a gauge
// transform multiplies all four transported corners by the one common phase
// e^{i chi_0}, and the bilinear zero is unchanged.  Interpolating the raw
// corner values instead would move the zero by O(h^2) under a smooth gauge
// change.  Detections closer than two lattice spacings are merged, so an
// |n| >= 2 core, whose discrete zeros split into |n| simple zeros, is
// reported once with its full charge.
//
// Tracking matches a new frame of observations against existing tracks by
// greedy nearest-neighbor assignment in track order, restricted to equal
// charges and capped by a matching radius.  Count changes, charge changes,
// and displacements beyond the radius all raise topology errors rather than
// silently reseating identities.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <vector>

#include "glvx/errors.hpp"
#include "glvx/lattice.hpp"

namespace glvx {

struct VortexObservation {
    double x = 0.0;
    double y = 0.0;
    int charge = 0;
    double core_value = 0.0; // |psi| at the lattice site nearest the position
};

namespace detail {

// Zero of the bilinear interpolant c0(1-s)(1-t) + c1 s(1-t) + c3 (1-s)t
// + c2 st on the unit cell, by Newton iteration from the cell center.  The
// caller only asks when the winding certifies an enclosed zero; if the
// iteration still fails to settle, the cell center is as good an answer as
// any at this resolution.
inline void bilinear_zero(complex_t c0, complex_t c1, complex_t c2, complex_t c3,
                          double& s, double& t) {
    complex_t b = c1 - c0, c = c3 - c0, d = c0 - c1 + c2 - c3;
    double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3), 1e-300});
    s = 0.5;
    t = 0.5;
    for (int it = 0; it < 40; ++it) {
        complex_t f = c0 + b * s + c * t + d * (s * t);
        if (std::abs(f) < 1e-14 * scale) break;
        complex_t fs = b + d * t, ft = c + d * s;
        double det = fs.real() * ft.imag() - fs.imag() * ft.real();
        if (std::abs(det) < 1e-300) break;
        double ds = (-f.real() * ft.imag() + f.imag() * ft.real()) / det;
        double dt = (-fs.real() * f.imag() + fs.imag() * f.real()) / det;
        s = std::clamp(s + ds, -1.0, 2.0);
        t = std::clamp(t + dt, -1.0, 2.0);
        if (std::abs(ds) + std::abs(dt) < 1e-14) break;
    }
    s = std::clamp(s, 0.0, 1.0);
    t = std::clamp(t, 0.0, 1.0);
}

} // namespace detail

// All vortex cores in the field, each with its net charge and sub-grid
// position, sorted by y then x.  A plaquette whose four corners all vanish
// below 1e-12 has no recoverable phase and raises a topology error.  A site
// where psi vanishes exactly is itself a core center; the winding is then
// taken around the eight surrounding sites and the position is the site
// itself, since interpolation through a zero corner is meaningless.
inline std::vector<VortexObservation> locate_vortices(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    const double two_pi = 2.0 * M_PI;

    auto circulation_charge = [&](double w, double cx, double cy) {
        long q = std::lround(w / two_pi);
        if (std::abs(w - two_pi * static_cast<double>(q)) > 1e-6) {
            char msg[96];
            std::snprintf(msg, sizeof msg,
                          "phase circulation %.3e near (%.3f, %.3f) is not a "
                          "multiple of 2*pi",
                          w, cx, cy);
            throw topology_error(msg);
        }
        return static_cast<int>(q);
    };

    std::vector<char> zero_site(lat.num_sites(), 0);
    for (size_t s = 0; s < u.psi.size(); ++s)
        if (std::abs(u.psi[s]) < 1e-12) zero_site[s] = 1;

    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            if (zero_site[lat.site(ix, iy)] && zero_site[lat.site(ix + 1, iy)] &&
                zero_site[lat.site(ix + 1, iy + 1)] && zero_site[lat.site(ix, iy + 1)]) {
                char msg[128];
                std::snprintf(msg, sizeof msg,
                              "degenerate plaquette at (%.3f, %.3f): |psi| < 1e-12 "
                              "on all four corners",
                              lat.coord(ix) + 0.5 * h, lat.coord(iy) + 0.5 * h);
                throw topology_error(msg);
            }

    struct Detection {
        double x, y;
        int charge;
    };
    std::vector<Detection> found;

    // Ring winding around exact zeros: eight corner-to-corner increments.
    static const int ring_dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int ring_dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    for (int iy = 1; iy < N - 1; ++iy)
        for (int ix = 1; ix < N - 1; ++ix) {
            if (!zero_site[lat.site(ix, iy)]) continue;
            double w = 0.0;
            for (int k = 0; k < 8; ++k) {
                complex_t a = u.psi[lat.site(ix + ring_dx[k], iy + ring_dy[k])];
                complex_t b =
                    u.psi[lat.site(ix + ring_dx[(k + 1) % 8], iy + ring_dy[(k + 1) % 8])];
                w += std::arg(b * std::conj(a));
            }
            int q = circulation_charge(w, lat.coord(ix), lat.coord(iy));
            if (q != 0) found.push_back({lat.coord(ix), lat.coord(iy), q});
        }

    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N - 1; ++ix) {
            int s0 = lat.site(ix, iy), s1 = lat.site(ix + 1, iy);
            int s2 = lat.site(ix + 1, iy + 1), s3 = lat.site(ix, iy + 1);
            if (zero_site[s0] || zero_site[s1] || zero_site[s2] || zero_site[s3]) continue;
            complex_t p0 = u.psi[s0], p1 = u.psi[s1], p2 = u.psi[s2], p3 = u.psi[s3];
            double w = std::arg(p1 * std::conj(p0)) + std::arg(p2 * std::conj(p1)) +
                       std::arg(p3 * std::conj(p2)) + std::arg(p0 * std::conj(p3));
            int q = circulation_charge(w, lat.coord(ix) + 0.5 * h, lat.coord(iy) + 0.5 * h);
            if (q == 0) continue;

            complex_t tx = std::polar(1.0, -h * u.ax[lat.xlink(ix, iy)]);
            complex_t ty0 = std::polar(1.0, -h * u.ay[lat.ylink(ix, iy)]);
            complex_t ty1 = std::polar(1.0, -h * u.ay[lat.ylink(ix + 1, iy)]);
            double s, t;
            detail::bilinear_zero(p0, tx * p1, tx * ty1 * p2, ty0 * p3, s, t);
            found.push_back({lat.coord(ix) + s * h, lat.coord(iy) + t * h, q});
        }

    // Merge detections within two lattice spacings (split zeros of a
    // multiply-charged core); clusters with zero net charge carry no vortex.
    size_t n = found.size();
    std::vector<size_t> parent(n);
    for (size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<size_t(size_t)> root = [&](size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    double merge_r2 = (2.0 * h) * (2.0 * h) * (1.0 + 1e-12);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double dx = found[i].x - found[j].x, dy = found[i].y - found[j].y;
            if (dx * dx + dy * dy <= merge_r2) parent[root(i)] = root(j);
        }

    std::vector<VortexObservation> out;
    std::vector<char> done(n, 0);
    for (size_t i = 0; i < n; ++i) {
        size_t r = root(i);
        if (done[r]) continue;
        done[r] = 1;
        double sx = 0.0, sy = 0.0;
        int charge = 0, count = 0;
        for (size_t j = 0; j < n; ++j)
            if (root(j) == r) {
                sx += found[j].x;
                sy += found[j].y;
                charge += found[j].charge;
                ++count;
            }
        if (charge == 0) continue;
        VortexObservation obs;
        obs.x = sx / count;
        obs.y = sy / count;
        obs.charge = charge;
        int ix = std::clamp(static_cast<int>(std::lround((obs.x + lat.extent) / h)), 0, N - 1);
        int iy = std::clamp(static_cast<int>(std::lround((obs.y + lat.extent) / h)), 0, N - 1);
        obs.core_value = std::abs(u.psi[lat.site(ix, iy)]);
        out.push_back(obs);
    }
    std::sort(out.begin(), out.end(), [](const VortexObservation& a, const VortexObservation& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return out;
}

// Identity-resolved vortex histories.  Track order is fixed by the first
// frame; every later frame appends one observation per track.
struct TrackSet {
    std::vector<int> charges;
    std::vector<std::vector<VortexObservation>> points;

    size_t num_tracks() const { return charges.size(); }
};

inline TrackSet start_tracks(const std::vector<VortexObservation>& obs) {
    TrackSet ts;
    ts.charges.reserve(obs.size());
    ts.points.reserve(obs.size());
    for (const VortexObservation& o : obs) {
        ts.charges.push_back(o.charge);
        ts.points.push_back({o});
    }
    return ts;
}

inline void match_step(TrackSet& ts, const std::vector<VortexObservation>& obs,
                       double match_radius = 1.0) {
    if (obs.size() != ts.num_tracks()) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "vortex count changed from %zu to %zu",
                      ts.num_tracks(), obs.size());
        throw topology_error(msg);
    }
    std::vector<char> used(obs.size(), 0);
    for (size_t j = 0; j < ts.num_tracks(); ++j) {
        const VortexObservation& last = ts.points[j].back();
        size_t best = obs.size();
        double best_d2 = match_radius * match_radius;
        for (size_t k = 0; k < obs.size(); ++k) {
            if (used[k] || obs[k].charge != ts.charges[j]) continue;
            double dx = obs[k].x - last.x, dy = obs[k].y - last.y;
            double d2 = dx * dx + dy * dy;
            if (d2 <= best_d2) {
                best_d2 = d2;
                best = k;
            }
        }
        if (best == obs.size()) {
            char msg[128];
            std::snprintf(msg, sizeof msg,
                          "no charge-%d vortex within radius %.3f of track %zu at "
                          "(%.3f, %.3f)",
                          ts.charges[j], match_radius, j, last.x, last.y);
            throw topology_error(msg);
        }
        used[best] = 1;
        ts.points[j].push_back(obs[best]);
    }
}

} // namespace glvx
