#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddclock/rng.hpp"
#include "ddclock/vec3.hpp"

namespace ddclock {

// Tetragonal lattice produced by the six-beam configuration: four beams in
// the x-y plane at angles +-theta from the y axis, two beams along z.  All
// lengths are in 1/k0 units, reciprocal lengths in k0 units.
struct LatticeGeometry {
    double theta = 0.0;   // beam half-angle, radians, in (0, pi/2)
    double kappa = 1.0;   // k0/kL (= lambda_L/lambda0)
    double ax = 0.0, ay = 0.0, az = 0.0;   // lattice constants
    double gx = 0.0, gy = 0.0, gz = 0.0;   // primitive reciprocal lengths

    double cell_volume() const { return ax * ay * az; }
};

inline LatticeGeometry build_six_beam_lattice(double theta, double kappa) {
    if (!(theta > 0.0) || !(theta < std::numbers::pi / 2)) {
        throw std::domain_error("build_six_beam_lattice: theta = " + std::to_string(theta) +
                                " outside open interval (0, pi/2)");
    }
    if (!(kappa > 0.0)) {
        throw std::domain_error("build_six_beam_lattice: kappa must be > 0");
    }
    LatticeGeometry geom;
    geom.theta = theta;
    geom.kappa = kappa;
    const double kl = 1.0 / kappa;  // trapping wavevector in k0 units
    geom.ax = std::numbers::pi / (kl * std::sin(theta));
    geom.ay = std::numbers::pi / (kl * std::cos(theta));
    geom.az = std::numbers::pi / kl;
    geom.gx = 2.0 * kl * std::sin(theta);
    geom.gy = 2.0 * kl * std::cos(theta);
    geom.gz = 2.0 * kl;
    return geom;
}

// Orthorhombic geometry from explicit constants.  The shift machinery only
// needs the three constants, so degenerate cases (e.g. simple cubic) can be
// studied without going through the six-beam parameterization.
inline LatticeGeometry lattice_from_constants(double ax, double ay, double az) {
    if (!(ax > 0.0 && ay > 0.0 && az > 0.0)) {
        throw std::domain_error("lattice_from_constants: all constants must be > 0");
    }
    LatticeGeometry geom;
    geom.theta = std::atan2(ay, ax);  // descriptive only
    geom.kappa = 0.0;
    geom.ax = ax;
    geom.ay = ay;
    geom.az = az;
    geom.gx = 2.0 * std::numbers::pi / ax;
    geom.gy = 2.0 * std::numbers::pi / ay;
    geom.gz = 2.0 * std::numbers::pi / az;
    return geom;
}

// Uniform-density sphere occupancy model: expected atom count <N>, per-site
// filling probability P, and the radius that holds <N>/P sites.
struct DensityProfile {
    double mean_atoms = 0.0;
    double filling = 1.0;
    double cell_volume = 0.0;
    double radius = 0.0;  // r0 = (3 <N> V / (4 pi P))^(1/3)
};

inline DensityProfile make_sphere_profile(const LatticeGeometry& geom, double mean_atoms,
                                          double filling) {
    if (!(filling > 0.0) || filling > 1.0) {
        throw std::domain_error("make_sphere_profile: filling P must be in (0, 1]");
    }
    if (!(mean_atoms > 0.0)) {
        throw std::domain_error("make_sphere_profile: mean atom count must be > 0");
    }
    DensityProfile p;
    p.mean_atoms = mean_atoms;
    p.filling = filling;
    p.cell_volume = geom.cell_volume();
    p.radius = std::cbrt(3.0 * mean_atoms * p.cell_volume / (4.0 * std::numbers::pi * filling));
    return p;
}

struct LatticeSite {
    std::int64_t ix = 0, iy = 0, iz = 0;
    Vec3 r;
};

namespace detail {

// Largest integer n >= 0 with (n*a)^2 < t2, or -1 when even n = 0 fails.
// The float guess is corrected by direct comparison so the result agrees
// exactly with a brute-force scan of the same strict inequality.
inline std::int64_t max_index_strictly_inside(double a, double t2) {
    if (!(t2 > 0.0)) return -1;
    auto inside = [&](std::int64_t n) {
        const double x = static_cast<double>(n) * a;
        return x * x < t2;
    };
    std::int64_t n = static_cast<std::int64_t>(std::floor(std::sqrt(t2) / a));
    if (n < 0) n = 0;
    while (n > 0 && !inside(n)) --n;
    while (inside(n + 1)) ++n;
    return inside(n) ? n : -1;
}

}  // namespace detail

// All lattice points with |r| < r0, sphere centered on the lattice point at
// the origin.  Returned in lexicographic (ix, iy, iz) order so downstream
// reductions are deterministic.
inline std::vector<LatticeSite> enumerate_sites(const LatticeGeometry& geom,
                                                const DensityProfile& profile) {
    const double r0 = profile.radius;
    const double r2 = r0 * r0;
    std::vector<LatticeSite> sites;
    sites.reserve(static_cast<std::size_t>(
        4.19 * r0 * r0 * r0 / geom.cell_volume() * 1.2 + 16));
    const std::int64_t nx = detail::max_index_strictly_inside(geom.ax, r2);
    for (std::int64_t ix = -nx; ix <= nx; ++ix) {
        const double x = static_cast<double>(ix) * geom.ax;
        const std::int64_t ny = detail::max_index_strictly_inside(geom.ay, r2 - x * x);
        for (std::int64_t iy = -ny; iy <= ny; ++iy) {
            const double y = static_cast<double>(iy) * geom.ay;
            const std::int64_t nz = detail::max_index_strictly_inside(geom.az, r2 - x * x - y * y);
            for (std::int64_t iz = -nz; iz <= nz; ++iz) {
                const double z = static_cast<double>(iz) * geom.az;
                sites.push_back({ix, iy, iz, {x, y, z}});
            }
        }
    }
    return sites;
}

// One occupancy realization: site positions kept with probability `filling`
// each.  Same seed, same sites -> identical sample, bit for bit.
struct AtomSample {
    std::vector<Vec3> positions;
    std::optional<std::uint64_t> seed;
};

inline AtomSample sample_occupancy(const std::vector<LatticeSite>& sites, double filling,
                                   std::uint64_t seed) {
    if (!(filling > 0.0) || filling > 1.0) {
        throw std::domain_error("sample_occupancy: filling P must be in (0, 1]");
    }
    AtomSample sample;
    sample.seed = seed;
    sample.positions.reserve(static_cast<std::size_t>(sites.size() * filling * 1.1) + 16);
    SplitMix64 rng(seed);
    for (const auto& s : sites) {
        if (rng.next_double() < filling) sample.positions.push_back(s.r);
    }
    return sample;
}

inline AtomSample full_sample(const std::vector<LatticeSite>& sites) {
    AtomSample sample;
    sample.positions.reserve(sites.size());
    for (const auto& s : sites) sample.positions.push_back(s.r);
    return sample;
}

// CSV site list: integer indices then k0-unit coordinates at 17 significant
// digits (round-trips doubles exactly).
inline void write_sites_csv(std::ostream& os, const std::vector<LatticeSite>& sites) {
    os << "ix,iy,iz,x,y,z\n";
    char buf[128];
    for (const auto& s : sites) {
        std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(s.ix), static_cast<long long>(s.iy),
                      static_cast<long long>(s.iz), s.r.x, s.r.y, s.r.z);
        os << buf;
    }
}

}  // namespace ddclock
