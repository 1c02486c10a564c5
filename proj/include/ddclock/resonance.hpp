#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ddclock/lattice.hpp"

namespace ddclock {

// Constructive-interference (Bragg-type) condition |G|^2 = 2 k0 G_x over
// reciprocal vectors G = (nx Gx, ny Gy, nz Gz).  Residual in k0^2 units.
inline double bragg_residual(const LatticeGeometry& geom, std::array<int, 3> n) {
    if (n[0] == 0 && n[1] == 0 && n[2] == 0) {
        throw std::domain_error("bragg_residual: zero index triple");
    }
    const double gx = n[0] * geom.gx;
    const double gy = n[1] * geom.gy;
    const double gz = n[2] * geom.gz;
    return gx * gx + gy * gy + gz * gz - 2.0 * gx;
}

struct ResonanceSolution {
    std::array<int, 3> index;
    double theta0 = 0.0;    // radians
    double residual = 0.0;  // condition residual at theta0
};

// Angles in [theta_lo, theta_hi] where some reciprocal vector with
// |n_i| <= max_index (n_x >= 1; the condition needs G_x > 0) satisfies the
// resonance condition.  Roots are found by sign-bracketed bisection of the
// residual; coincident roots from different triples are merged, keeping the
// lowest-order indices.  The residual is even in n_y and n_z, so only
// non-negative values are enumerated.
inline std::vector<ResonanceSolution> find_resonant_angles(double kappa, double theta_lo,
                                                           double theta_hi, int max_index = 4) {
    if (max_index < 1) throw std::domain_error("find_resonant_angles: max_index must be >= 1");
    if (!(theta_lo > 0.0) || !(theta_hi < std::numbers::pi / 2) || !(theta_lo < theta_hi)) {
        throw std::domain_error("find_resonant_angles: range must lie inside (0, pi/2)");
    }

    std::vector<ResonanceSolution> found;
    const int grid = 2048;
    for (int nx = 1; nx <= max_index; ++nx) {
        for (int ny = 0; ny <= max_index; ++ny) {
            for (int nz = 0; nz <= max_index; ++nz) {
                const std::array<int, 3> n{nx, ny, nz};
                auto residual = [&](double th) {
                    return bragg_residual(build_six_beam_lattice(th, kappa), n);
                };
                double prev_th = theta_lo;
                double prev_r = residual(prev_th);
                for (int i = 1; i <= grid; ++i) {
                    const double th = theta_lo + (theta_hi - theta_lo) * i / grid;
                    const double r = residual(th);
                    if (prev_r == 0.0 || prev_r * r < 0.0) {
                        double lo = prev_th, hi = th;
                        double rlo = prev_r;
                        for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            const double rm = residual(mid);
                            if (rlo * rm <= 0.0) {
                                hi = mid;
                            } else {
                                lo = mid;
                                rlo = rm;
                            }
                        }
                        const double root = 0.5 * (lo + hi);
                        found.push_back({n, root, residual(root)});
                    }
                    prev_th = th;
                    prev_r = r;
                }
            }
        }
    }

    std::sort(found.begin(), found.end(), [](const ResonanceSolution& a,
                                             const ResonanceSolution& b) {
        return a.theta0 < b.theta0;
    });
    // Merge roots within 1e-6 rad, keeping the lowest |n|.
    std::vector<ResonanceSolution> merged;
    auto order = [](const std::array<int, 3>& n) {
        return std::array<long, 4>{static_cast<long>(n[0]) * n[0] + static_cast<long>(n[1]) * n[1] +
                                       static_cast<long>(n[2]) * n[2],
                                   static_cast<long>(n[0]), static_cast<long>(n[1]),
                                   static_cast<long>(n[2])};
    };
    for (const auto& sol : found) {
        if (!merged.empty() && sol.theta0 - merged.back().theta0 < 1e-6) {
            if (order(sol.index) < order(merged.back().index)) {
                merged.back().index = sol.index;
                merged.back().theta0 = sol.theta0;
                merged.back().residual = sol.residual;
            }
        } else {
            merged.push_back(sol);
        }
    }
    return merged;
}

// Order-of-magnitude estimate of the resonant line shift, delta_p/Gamma ~
// N^{2/3} / beta, where beta sets the neighbor spacing via the atomic
// density n = 1/(beta lambda)^3.
struct ScalingEstimate {
    double value = 0.0;
    static constexpr bool order_of_magnitude_only = true;
};

inline ScalingEstimate scaling_estimate(double n_atoms, double beta) {
    if (!(n_atoms >= 1.0)) throw std::domain_error("scaling_estimate: need N >= 1");
    if (!(beta > 0.0)) throw std::domain_error("scaling_estimate: beta must be > 0");
    return {std::cbrt(n_atoms * n_atoms) / beta};
}

// beta from the atomic density (atoms per (1/k0)^3): n = 1/(beta lambda0)^3.
inline double beta_from_density(double density) {
    if (!(density > 0.0)) throw std::domain_error("beta_from_density: density must be > 0");
    return 1.0 / (2.0 * std::numbers::pi * std::cbrt(density));
}

struct ZeroShiftResult {
    double theta = 0.0;  // radians
    double shift = 0.0;  // residual shift at theta
};

// Locates a zero of the shift between two resonances by bisection plus
// secant refinement, to |shift| <= 1e-8 * (peak |shift| sampled in the
// bracket).  A bracket spanning two resonances can hold several crossings
// (each dispersive feature has its own null); the crossing nearest the
// bracket center is the suppressed region between the resonances, so that
// one is refined.  Returns nothing when the bracket shows no sign change --
// the caller decides whether to widen it.
inline std::optional<ZeroShiftResult> find_zero_shift(
    const std::function<double(double)>& shift_fn, double theta_lo, double theta_hi) {
    if (!(theta_lo < theta_hi)) throw std::domain_error("find_zero_shift: empty bracket");

    const int scan = 32;
    double peak = 0.0;
    std::vector<double> th(scan + 1), val(scan + 1);
    for (int i = 0; i <= scan; ++i) {
        th[i] = theta_lo + (theta_hi - theta_lo) * i / scan;
        val[i] = shift_fn(th[i]);
        peak = std::max(peak, std::abs(val[i]));
    }
    const double center = 0.5 * (theta_lo + theta_hi);
    int seg = -1;
    double seg_dist = 0.0;
    for (int i = 0; i < scan; ++i) {
        if (val[i] == 0.0 || val[i] * val[i + 1] < 0.0) {
            const double dist = std::abs(0.5 * (th[i] + th[i + 1]) - center);
            if (seg < 0 || dist < seg_dist) {
                seg = i;
                seg_dist = dist;
            }
        }
    }
    if (seg < 0) return std::nullopt;

    double lo = th[seg], hi = th[seg + 1];
    double flo = val[seg], fhi = val[seg + 1];
    const double target = 1e-8 * peak;
    double best_x = std::abs(flo) < std::abs(fhi) ? lo : hi;
    double best_f = std::abs(flo) < std::abs(fhi) ? flo : fhi;
    for (int it = 0; it < 80 && std::abs(best_f) > target; ++it) {
        // Alternate bisection with secant steps for robustness + speed.
        double x;
        if (it % 2 == 0 && fhi != flo) {
            x = hi - fhi * (hi - lo) / (fhi - flo);
            if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        } else {
            x = 0.5 * (lo + hi);
        }
        const double fx = shift_fn(x);
        if (std::abs(fx) < std::abs(best_f)) {
            best_f = fx;
            best_x = x;
        }
        if (flo * fx <= 0.0) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        if (hi - lo < 1e-14 * (1.0 + std::abs(hi))) break;
    }
    return ZeroShiftResult{best_x, best_f};
}

}  // namespace ddclock
