#pragma once

// Binary field snapshots.  Byte layout (little-endian, see docs/formats.md):
//
//   bytes 0..3   magic "GLVX"
//   u32          format version (currently 1)
//   u32          N, sites per side
//   f64          L, half-width of the domain
//   f64[2 N^2]   psi, re/im interleaved, row-major (iy outer, ix inner)
//   f64[(N-1)N]  A on x-links, row-major
//   f64[N(N-1)]  A on y-links, row-major
//   u8           1 if a momentum block follows, else 0
//   (optional momentum block: pi, E_x, E_y with the same shapes)
//
// The coupling lambda is run configuration, not field data, so it is supplied
// by the reader.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "glvx/errors.hpp"
#include "glvx/lattice.hpp"

namespace glvx {

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

inline void put_f64(std::ostream& out, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

inline void put_complex_block(std::ostream& out, const std::vector<complex_t>& v) {
    for (const complex_t& c : v) {
        put_f64(out, c.real());
        put_f64(out, c.imag());
    }
}

inline void put_real_block(std::ostream& out, const std::vector<double>& v) {
    for (double x : v) put_f64(out, x);
}

inline void get_complex_block(std::istream& in, std::vector<complex_t>& v) {
    for (complex_t& c : v) {
        double re = get_f64(in);
        c = complex_t{re, get_f64(in)};
    }
}

inline void get_real_block(std::istream& in, std::vector<double>& v) {
    for (double& x : v) x = get_f64(in);
}

} // namespace detail

inline void write_snapshot(const std::string& path, const FieldState& u,
                           const MomentumState* phi = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open snapshot for writing: " + path);
    out.write("GLVX", 4);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<uint32_t>(u.lattice.points_per_side));
    detail::put_f64(out, u.lattice.extent);
    detail::put_complex_block(out, u.psi);
    detail::put_real_block(out, u.ax);
    detail::put_real_block(out, u.ay);
    unsigned char flag = phi ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&flag), 1);
    if (phi) {
        if (!(phi->lattice == u.lattice))
            throw config_error("snapshot: momentum lattice mismatch");
        detail::put_complex_block(out, phi->pi);
        detail::put_real_block(out, phi->ex);
        detail::put_real_block(out, phi->ey);
    }
    if (!out) throw config_error("short write while saving snapshot: " + path);
}

struct Snapshot {
    FieldState field;
    std::optional<MomentumState> momentum;
};

inline Snapshot read_snapshot(const std::string& path, double lambda) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open snapshot: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GLVX", 4) != 0)
        throw config_error("not a GLVX snapshot: " + path);
    uint32_t version = detail::get_u32(in);
    if (version != 1)
        throw config_error("unsupported snapshot version " + std::to_string(version));
    uint32_t N = detail::get_u32(in);
    double L = detail::get_f64(in);
    LatticeSpec lat{L, static_cast<int>(N)};
    lat.validate();

    Snapshot snap;
    snap.field.lattice = lat;
    snap.field.lambda = lambda;
    snap.field.psi.resize(lat.num_sites());
    snap.field.ax.resize(lat.num_xlinks());
    snap.field.ay.resize(lat.num_ylinks());
    detail::get_complex_block(in, snap.field.psi);
    detail::get_real_block(in, snap.field.ax);
    detail::get_real_block(in, snap.field.ay);
    unsigned char flag = 0;
    in.read(reinterpret_cast<char*>(&flag), 1);
    if (flag) {
        MomentumState phi = make_zero_momentum(lat);
        detail::get_complex_block(in, phi.pi);
        detail::get_real_block(in, phi.ex);
        detail::get_real_block(in, phi.ey);
        snap.momentum = std::move(phi);
    }
    if (!in) throw config_error("truncated snapshot: " + path);
    return snap;
}

} // namespace glvx
