#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ddclock/vec3.hpp"

namespace ddclock {

// Dimensionless dipole coupling kernels for two z-polarized dipoles separated
// by v = k0 * (r_a - r_b).  f carries cooperative decay, g coherent exchange.
//
//   f(v) =  3/2 [ sin^2(th) sin(v)/v + (3 cos^2(th) - 1)(sin(v)/v^3 - cos(v)/v^2) ]
//   g(v) = -3/2 [ sin^2(th) cos(v)/v + (3 cos^2(th) - 1)(cos(v)/v^3 + sin(v)/v^2) ]
//
// th is the polar angle of v against the z (polarization) axis.  cos(th) is
// taken as v_z/|v| directly; no inverse trig.

namespace detail {

// sin(v)/v^3 - cos(v)/v^2.  The two terms are each O(1/v^2) for small v and
// cancel to O(1), so below the crossover the series
//   1/3 - v^2/30 + v^4/840 - v^6/45360 + v^8/3991680
// is used instead (absolute error < 1e-22 at v = 1e-2).
inline double sin_cos_bracket(double v) {
    if (v < 1e-2) {
        const double v2 = v * v;
        return 1.0 / 3.0 +
               v2 * (-1.0 / 30.0 + v2 * (1.0 / 840.0 + v2 * (-1.0 / 45360.0 + v2 / 3991680.0)));
    }
    return std::sin(v) / (v * v * v) - std::cos(v) / (v * v);
}

inline void require_separated(const Vec3& v, const char* who) {
    if (v.norm2() <= 0.0) {
        throw std::domain_error(std::string(who) + ": coincident sites (|v| = 0) are not allowed");
    }
}

}  // namespace detail

inline double f_kernel(const Vec3& v) {
    detail::require_separated(v, "f_kernel");
    const double r = v.norm();
    const double cos2 = (v.z / r) * (v.z / r);
    const double sin2 = 1.0 - cos2;
    const double p2 = 3.0 * cos2 - 1.0;
    const double sinc = (r < 1e-8) ? 1.0 - r * r / 6.0 : std::sin(r) / r;
    return 1.5 * (sin2 * sinc + p2 * detail::sin_cos_bracket(r));
}

inline double g_kernel(const Vec3& v) {
    detail::require_separated(v, "g_kernel");
    const double r = v.norm();
    const double cos2 = (v.z / r) * (v.z / r);
    const double sin2 = 1.0 - cos2;
    const double p2 = 3.0 * cos2 - 1.0;
    // Genuine 1/v^3 pole; no cancellation, direct evaluation is stable.
    return -1.5 * (sin2 * std::cos(r) / r +
                   p2 * (std::cos(r) / (r * r * r) + std::sin(r) / (r * r)));
}

// Classical interaction energy of two phased oscillating dipoles, in units of
// hbar*Gamma/4:  U~ = g(v) cos(v_x) - f(v) sin(v_x).
inline double pair_energy(const Vec3& v) {
    return g_kernel(v) * std::cos(v.x) - f_kernel(v) * std::sin(v.x);
}

// Quadrature component driving cooperative decay:  D = f(v) cos(v_x) + g(v) sin(v_x).
inline double quadrature_coupling(const Vec3& v) {
    return f_kernel(v) * std::cos(v.x) + g_kernel(v) * std::sin(v.x);
}

// Normalized z-field profile of an oscillating dipole evaluated at offset v:
//   F(v) = e^{iv} [ sin^2(th)/v + (3 cos^2(th) - 1)(1/v^3 - i/v^2) ].
// Computed directly from the field expression (not via f and g) so it serves
// as an independent cross-check; algebraically f = 3/2 Im F, g = -3/2 Re F.
inline std::complex<double> classical_field_z(const Vec3& v) {
    detail::require_separated(v, "classical_field_z");
    const double r = v.norm();
    const double cos2 = (v.z / r) * (v.z / r);
    const double sin2 = 1.0 - cos2;
    const double p2 = 3.0 * cos2 - 1.0;
    const std::complex<double> bracket(sin2 / r + p2 / (r * r * r), -p2 / (r * r));
    return std::polar(1.0, r) * bracket;
}

}  // namespace ddclock
