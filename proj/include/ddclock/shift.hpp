#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddclock/errors.hpp"
#include "ddclock/kernels.hpp"
#include "ddclock/lattice.hpp"
#include "ddclock/summation.hpp"

namespace ddclock {

struct RamseyParams {
    double pulse_error = 0.0;    // eps = cos(2 Omega tau)
    double interrogation = 0.0;  // Gamma * t
    double dephasing = 0.0;      // gamma / Gamma
    double detuning = 0.0;       // delta / Gamma
};

inline void validate_ramsey(const RamseyParams& p) {
    if (!(std::abs(p.pulse_error) <= 1.0)) {
        throw std::domain_error("RamseyParams: |pulse_error| must be <= 1");
    }
    if (p.interrogation < 0.0) throw std::domain_error("RamseyParams: interrogation must be >= 0");
    if (p.dephasing < 0.0) throw std::domain_error("RamseyParams: dephasing must be >= 0");
}

enum class ShiftMethod { brute, restructured };

struct ShiftResult {
    double zeroth = 0.0;  // delta_p^0 / Gamma (pulse-error term)
    double first = 0.0;   // delta_p^1 / Gamma (decay term, includes the Gamma*t factor)
    double total = 0.0;   // zeroth + first
    ShiftMethod method = ShiftMethod::brute;
    std::size_t n_atoms = 0;
    std::optional<std::uint64_t> seed;
    // Set when Gamma*t > 0.1 or |delta_p * t| > 0.3, outside the regime where
    // the perturbative line-shift expression applies.
    bool outside_perturbative_validity = false;
};

namespace detail {

inline void flag_validity(ShiftResult& r, double gamma_t) {
    r.total = r.zeroth + r.first;
    r.outside_perturbative_validity = gamma_t > 0.1 || std::abs(r.total * gamma_t) > 0.3;
}

}  // namespace detail

// Perturbative Ramsey line shift from explicit positions:
//
//   delta_p / Gamma = (1/N) sum_a sum_{b!=a} U~_ab [ eps/2 + (Gamma t/4) G~_a ],
//   G~_a = 1 + (1/2) sum_{j != a,b} D_aj .
//
// The three-index sum is factored to O(N^2) via
// sum_{j != a,b} D_aj = (sum_{j != a} D_aj) - D_ab.  Single-threaded with
// compensated accumulation in site order, so the result is independent of
// any caller-side parallelism.
inline ShiftResult shift_brute(const AtomSample& sample, const RamseyParams& params,
                               std::size_t max_atoms = 3000) {
    validate_ramsey(params);
    const std::size_t n = sample.positions.size();
    if (n == 0) throw std::domain_error("shift_brute: empty sample");
    if (n > max_atoms) {
        throw capacity_error("shift_brute: " + std::to_string(n) + " atoms exceeds guard of " +
                             std::to_string(max_atoms) +
                             " (raise max_atoms to override, cost grows as N^2)");
    }

    ShiftResult result;
    result.method = ShiftMethod::brute;
    result.n_atoms = n;
    result.seed = sample.seed;
    if (n == 1) {
        detail::flag_validity(result, params.interrogation);
        return result;
    }

    // Per-atom accumulators: S_a = sum_b D_ab, T_a = sum_b U~_ab,
    // W_a = sum_b U~_ab D_ab.
    std::vector<CompensatedSum> S(n), T(n), W(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const Vec3 v = sample.positions[a] - sample.positions[b];
            if (v.norm2() == 0.0) {
                throw std::domain_error("shift_brute: coincident atoms at indices " +
                                        std::to_string(a) + ", " + std::to_string(b));
            }
            const double f = f_kernel(v);
            const double g = g_kernel(v);
            const double c = std::cos(v.x);
            const double s = std::sin(v.x);
            const double u_ab = g * c - f * s;  // v = r_a - r_b
            const double u_ba = g * c + f * s;
            const double d_ab = f * c + g * s;
            const double d_ba = f * c - g * s;
            S[a] += d_ab;
            S[b] += d_ba;
            T[a] += u_ab;
            T[b] += u_ba;
            W[a] += u_ab * d_ab;
            W[b] += u_ba * d_ba;
        }
    }

    CompensatedSum zeroth_sum, first_sum;
    for (std::size_t a = 0; a < n; ++a) {
        const double ta = T[a].value();
        zeroth_sum += ta;
        first_sum += ta + 0.5 * (S[a].value() * ta - W[a].value());
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.zeroth = 0.5 * params.pulse_error * inv_n * zeroth_sum.value();
    result.first = 0.25 * params.interrogation * inv_n * first_sum.value();
    detail::flag_validity(result, params.interrogation);
    return result;
}

// ---------------------------------------------------------------------------
// Restructured lattice-vector sums.
//
// For a perfectly known sphere of lattice sites, pair sums collapse to
//   sum_{R != 0} w(R) N(R)
// over direct lattice vectors R, where N(R) counts ordered site pairs
// separated by R.  N(R) is evaluated exactly by column slicing: for each
// (iy, iz) column the admissible ix range of the sphere/shifted-sphere
// intersection is an integer interval, and summing a trapezoidal count
// profile against prefix sums of w makes each column O(1).
// ---------------------------------------------------------------------------

// Per-column maximal |ix| with the site strictly inside the sphere (-1 for
// empty columns), indexed by (iy, iz) over the bounding box.
class SphereColumnTable {
  public:
    SphereColumnTable(const LatticeGeometry& geom, double radius) : geom_(geom), radius_(radius) {
        const double r2 = radius * radius;
        my_ = std::max<std::int64_t>(detail::max_index_strictly_inside(geom.ay, r2), 0);
        mz_ = std::max<std::int64_t>(detail::max_index_strictly_inside(geom.az, r2), 0);
        limits_.assign(static_cast<std::size_t>((2 * my_ + 1) * (2 * mz_ + 1)), -1);
        site_count_ = 0;
        for (std::int64_t iy = -my_; iy <= my_; ++iy) {
            const double y = static_cast<double>(iy) * geom.ay;
            for (std::int64_t iz = -mz_; iz <= mz_; ++iz) {
                const double z = static_cast<double>(iz) * geom.az;
                const std::int64_t a =
                    detail::max_index_strictly_inside(geom.ax, r2 - y * y - z * z);
                limits_[index(iy, iz)] = a;
                if (a >= 0) site_count_ += 2 * a + 1;
            }
        }
    }

    // -1 when the column holds no sites (including out-of-box lookups).
    std::int64_t limit(std::int64_t iy, std::int64_t iz) const {
        if (iy < -my_ || iy > my_ || iz < -mz_ || iz > mz_) return -1;
        return limits_[index(iy, iz)];
    }

    std::int64_t max_iy() const { return my_; }
    std::int64_t max_iz() const { return mz_; }
    std::int64_t site_count() const { return site_count_; }
    const LatticeGeometry& geometry() const { return geom_; }
    double radius() const { return radius_; }

  private:
    std::size_t index(std::int64_t iy, std::int64_t iz) const {
        return static_cast<std::size_t>((iy + my_) * (2 * mz_ + 1) + (iz + mz_));
    }

    LatticeGeometry geom_;
    double radius_ = 0.0;
    std::int64_t my_ = 0, mz_ = 0;
    std::int64_t site_count_ = 0;
    std::vector<std::int64_t> limits_;
};

// Ordered pairs of in-sphere sites separated by R = (nx*ax, ny*ay, nz*az).
inline std::int64_t pair_count(const SphereColumnTable& table, std::int64_t nx, std::int64_t ny,
                               std::int64_t nz) {
    if (nx == 0 && ny == 0 && nz == 0) {
        throw std::domain_error("pair_count: R = 0 does not define a pair");
    }
    std::int64_t count = 0;
    const std::int64_t my = table.max_iy(), mz = table.max_iz();
    for (std::int64_t iy = std::max(-my, -my - ny); iy <= std::min(my, my - ny); ++iy) {
        for (std::int64_t iz = std::max(-mz, -mz - nz); iz <= std::min(mz, mz - nz); ++iz) {
            const std::int64_t a = table.limit(iy, iz);
            if (a < 0) continue;
            const std::int64_t b = table.limit(iy + ny, iz + nz);
            if (b < 0) continue;
            // ix in [-a, a] and ix + nx in [-b, b]
            const std::int64_t lo = std::max(-a, -b - nx);
            const std::int64_t hi = std::min(a, b - nx);
            if (hi >= lo) count += hi - lo + 1;
        }
    }
    return count;
}

inline std::int64_t pair_count(const LatticeGeometry& geom, const DensityProfile& profile,
                               std::int64_t nx, std::int64_t ny, std::int64_t nz) {
    SphereColumnTable table(geom, profile.radius);
    return pair_count(table, nx, ny, nz);
}

// sum_{R != 0} w(R) N(R) for a weight w(R) that is invariant under the sign
// flip of each component separately (true of U(R) = g(kR) cos(kR_x) and any
// even function of it).  Work is O(sites^{2/3}) per (ny, nz) row after the
// per-row prefix sums, using the octant symmetry of both w and N.
template <typename WeightFn>
double lattice_pair_sum(const SphereColumnTable& table, WeightFn&& weight) {
    const LatticeGeometry& geom = table.geometry();
    const double r0 = table.radius();
    const double four_r2 = 4.0 * r0 * r0;
    const std::int64_t my = table.max_iy(), mz = table.max_iz();
    const std::int64_t a_max = std::max<std::int64_t>(table.limit(0, 0), 0);
    const std::int64_t nx_cap = 2 * a_max;

    std::vector<double> w0(static_cast<std::size_t>(nx_cap) + 2);
    std::vector<double> w1(static_cast<std::size_t>(nx_cap) + 2);

    CompensatedSum total;
    for (std::int64_t nz = 0; nz <= 2 * mz; ++nz) {
        const double dz = static_cast<double>(nz) * geom.az;
        if (dz * dz >= four_r2) break;
        for (std::int64_t ny = 0; ny <= 2 * my; ++ny) {
            const double dy = static_cast<double>(ny) * geom.ay;
            const double dyz2 = dy * dy + dz * dz;
            if (dyz2 >= four_r2) break;
            const double row_mult = (ny > 0 ? 2.0 : 1.0) * (nz > 0 ? 2.0 : 1.0);

            // Longest admissible |nx| for this row: pairs need |R| < 2 r0.
            std::int64_t nx_hi =
                std::min(nx_cap, detail::max_index_strictly_inside(geom.ax, four_r2 - dyz2));
            if (nx_hi < 0) continue;

            // Prefix sums of the multiplicity-weighted w over nx >= 0.
            w0[0] = w1[0] = 0.0;
            for (std::int64_t nx = 0; nx <= nx_hi; ++nx) {
                double wv = 0.0;
                if (nx != 0 || ny != 0 || nz != 0) {
                    const double mult = row_mult * (nx > 0 ? 2.0 : 1.0);
                    wv = mult * weight(Vec3{static_cast<double>(nx) * geom.ax, dy, dz});
                }
                w0[static_cast<std::size_t>(nx) + 1] = w0[static_cast<std::size_t>(nx)] + wv;
                w1[static_cast<std::size_t>(nx) + 1] =
                    w1[static_cast<std::size_t>(nx)] + static_cast<double>(nx) * wv;
            }

            CompensatedSum row;
            for (std::int64_t iy = std::max(-my, -my - ny); iy <= std::min(my, my - ny); ++iy) {
                for (std::int64_t iz = std::max(-mz, -mz - nz); iz <= std::min(mz, mz - nz);
                     ++iz) {
                    const std::int64_t a = table.limit(iy, iz);
                    if (a < 0) continue;
                    const std::int64_t b = table.limit(iy + ny, iz + nz);
                    if (b < 0) continue;
                    // N(nx) = 2 min(a,b)+1 on [0, |a-b|], then ramps down
                    // linearly to zero at nx = a+b+1.
                    const std::int64_t d = std::min(a < b ? b - a : a - b, nx_hi);
                    const std::int64_t s = std::min(a + b, nx_hi);
                    const double plateau = static_cast<double>(2 * std::min(a, b) + 1);
                    const std::size_t di = static_cast<std::size_t>(d) + 1;
                    const std::size_t si = static_cast<std::size_t>(s) + 1;
                    double contrib = plateau * (w0[di] - w0[0]);
                    contrib += static_cast<double>(a + b + 1) * (w0[si] - w0[di]);
                    contrib -= w1[si] - w1[di];
                    row += contrib;
                }
            }
            total += row.value();
        }
    }
    return total.value();
}

// Dipole pair energy restricted to lattice vectors: U(R) = g(kR) cos(kR_x).
inline double lattice_pair_energy(const Vec3& r) { return g_kernel(r) * std::cos(r.x); }

// Zeroth-order shift for a perfectly filled sphere via the lattice-vector
// sum:  delta_p^0 / Gamma = (eps/2) sum_{R != 0} U(R) N(R) / N.
inline ShiftResult shift_restructured_perfect(const LatticeGeometry& geom,
                                              const DensityProfile& profile, double pulse_error) {
    if (profile.filling != 1.0) {
        throw std::domain_error(
            "shift_restructured_perfect: requires P = 1 (use mean_shift_imperfect)");
    }
    SphereColumnTable table(geom, profile.radius);
    const double sum = lattice_pair_sum(table, lattice_pair_energy);
    ShiftResult result;
    result.method = ShiftMethod::restructured;
    result.n_atoms = static_cast<std::size_t>(table.site_count());
    result.zeroth = 0.5 * pulse_error * sum / static_cast<double>(table.site_count());
    result.first = 0.0;
    detail::flag_validity(result, 0.0);
    return result;
}

// Ensemble-average zeroth-order shift under independent Bernoulli(P) site
// occupancy:  <delta_p>/Gamma = (eps/2<N>) sum_R U(R) P^2 N(R), normalized by
// the realized mean count <N> = P * (sites in sphere) so the P = 1 limit
// reproduces shift_restructured_perfect exactly.
inline double mean_shift_imperfect(const LatticeGeometry& geom, const DensityProfile& profile,
                                   double pulse_error) {
    SphereColumnTable table(geom, profile.radius);
    const double sum = lattice_pair_sum(table, lattice_pair_energy);
    const double p = profile.filling;
    const double mean_n = p * static_cast<double>(table.site_count());
    return 0.5 * pulse_error * p * p * sum / mean_n;
}

// Exact occupancy variance of the zeroth-order shift.  Evaluating the
// R,R'-double sum directly is O((#R)^2); expanding N(R) over site pairs and
// regrouping gives the algebraically identical form
//
//   Var = (eps/2<N>)^2 [ 4 P^3 (1-P) sum_i Phi_i^2
//                        + 2 P^2 (1-P)^2 sum_{R != 0} U(R)^2 N(R) ],
//
// with Phi_i = sum_{j != i} U(r_j - r_i), which needs one O(M^2) pass over
// sites.  The guard bounds that pass.
inline double variance_full(const LatticeGeometry& geom, const DensityProfile& profile,
                            double pulse_error, std::size_t max_sites = 10000) {
    const double p = profile.filling;
    if (p == 1.0) return 0.0;  // deterministic filling
    SphereColumnTable table(geom, profile.radius);
    const std::int64_t m = table.site_count();
    if (m > static_cast<std::int64_t>(max_sites)) {
        throw capacity_error("variance_full: " + std::to_string(m) + " sites exceeds guard of " +
                             std::to_string(max_sites) +
                             " (raise max_sites to override, or use variance_diffuse)");
    }

    const auto sites = enumerate_sites(geom, profile);
    std::vector<CompensatedSum> phi(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const double u = lattice_pair_energy(sites[j].r - sites[i].r);
            phi[i] += u;  // U is even, so U(r_i - r_j) = U(r_j - r_i)
            phi[j] += u;
        }
    }
    CompensatedSum phi2;
    for (auto& p_i : phi) {
        const double v = p_i.value();
        phi2 += v * v;
    }
    const double u2_sum =
        lattice_pair_sum(table, [](const Vec3& r) {
            const double u = lattice_pair_energy(r);
            return u * u;
        });
    const double mean_n = p * static_cast<double>(m);
    const double pref = 0.5 * pulse_error / mean_n;
    return pref * pref *
           (4.0 * p * p * p * (1.0 - p) * phi2.value() +
            2.0 * p * p * (1.0 - p) * (1.0 - p) * u2_sum);
}

// Sparse-filling (P << 1) limit of the variance, keeping only the rho^2 term:
//   Var = (eps/2<N>)^2 * 2 P^2 sum_{R != 0} U(R)^2 N(R).
// Documented validity P <~ 0.2; callers are expected to warn above that.
inline double variance_diffuse(const LatticeGeometry& geom, const DensityProfile& profile,
                               double pulse_error) {
    SphereColumnTable table(geom, profile.radius);
    const double u2_sum = lattice_pair_sum(table, [](const Vec3& r) {
        const double u = lattice_pair_energy(r);
        return u * u;
    });
    const double p = profile.filling;
    const double mean_n = p * static_cast<double>(table.site_count());
    const double pref = 0.5 * pulse_error / mean_n;
    return pref * pref * 2.0 * p * p * u2_sum;
}

constexpr double kDiffuseFillingSoftLimit = 0.2;

// ---------------------------------------------------------------------------
// Approximate fast path: the pair count N(R) of a perfectly known sphere is
// replaced by the continuum sphere-overlap volume over the cell volume,
//   N(R) ~= V_ov(|R|) / V,  V_ov = (pi/12)(4 r0 + |R|)(2 r0 - |R|)^2,
// which drops the per-R column work.  Accurate up to O(M^{-1/3}) surface
// terms; the exact lattice-sum path above is the reference.
// ---------------------------------------------------------------------------

inline double sphere_overlap_volume(double r0, double distance) {
    if (distance >= 2.0 * r0) return 0.0;
    const double d = 2.0 * r0 - distance;
    return std::numbers::pi / 12.0 * (4.0 * r0 + distance) * d * d;
}

template <typename WeightFn>
double lattice_overlap_sum(const LatticeGeometry& geom, double r0, WeightFn&& weight) {
    const double four_r2 = 4.0 * r0 * r0;
    const double vol = geom.cell_volume();
    CompensatedSum total;
    const auto nz_hi = detail::max_index_strictly_inside(geom.az, four_r2);
    for (std::int64_t nz = 0; nz <= nz_hi; ++nz) {
        const double dz = static_cast<double>(nz) * geom.az;
        const auto ny_hi = detail::max_index_strictly_inside(geom.ay, four_r2 - dz * dz);
        if (ny_hi < 0) break;
        for (std::int64_t ny = 0; ny <= ny_hi; ++ny) {
            const double dy = static_cast<double>(ny) * geom.ay;
            const double dyz2 = dy * dy + dz * dz;
            const double row_mult = (ny > 0 ? 2.0 : 1.0) * (nz > 0 ? 2.0 : 1.0);
            const auto nx_hi = detail::max_index_strictly_inside(geom.ax, four_r2 - dyz2);
            CompensatedSum row;
            for (std::int64_t nx = (ny == 0 && nz == 0) ? 1 : 0; nx <= nx_hi; ++nx) {
                const double dx = static_cast<double>(nx) * geom.ax;
                const double dist = std::sqrt(dx * dx + dyz2);
                const double mult = row_mult * (nx > 0 ? 2.0 : 1.0);
                row += mult * weight(Vec3{dx, dy, dz}) * sphere_overlap_volume(r0, dist) / vol;
            }
            total += row.value();
        }
    }
    return total.value();
}

// Overlap-volume approximation of the ensemble-mean shift; normalized by the
// continuum count <N> = P (4/3) pi r0^3 / V for internal consistency.
inline double mean_shift_imperfect_overlap(const LatticeGeometry& geom,
                                           const DensityProfile& profile, double pulse_error) {
    const double r0 = profile.radius;
    const double sum = lattice_overlap_sum(geom, r0, lattice_pair_energy);
    const double p = profile.filling;
    const double mean_n =
        p * 4.0 * std::numbers::pi * r0 * r0 * r0 / (3.0 * geom.cell_volume());
    return 0.5 * pulse_error * p * p * sum / mean_n;
}

// Overlap-volume approximation of the diffuse-limit variance.
inline double variance_diffuse_overlap(const LatticeGeometry& geom,
                                       const DensityProfile& profile, double pulse_error) {
    const double r0 = profile.radius;
    const double sum = lattice_overlap_sum(geom, r0, [](const Vec3& r) {
        const double u = lattice_pair_energy(r);
        return u * u;
    });
    const double p = profile.filling;
    const double mean_n =
        p * 4.0 * std::numbers::pi * r0 * r0 * r0 / (3.0 * geom.cell_volume());
    const double pref = 0.5 * pulse_error / mean_n;
    return pref * pref * 2.0 * p * p * sum;
}

// Pair histogram over all separations (test- and diagnostics-sized systems).
inline std::map<std::array<std::int64_t, 3>, std::int64_t> build_pair_histogram(
    const LatticeGeometry& geom, const DensityProfile& profile, std::size_t max_sites = 5000) {
    SphereColumnTable table(geom, profile.radius);
    if (table.site_count() > static_cast<std::int64_t>(max_sites)) {
        throw capacity_error("build_pair_histogram: site count exceeds guard");
    }
    std::map<std::array<std::int64_t, 3>, std::int64_t> hist;
    const std::int64_t reach_y = 2 * table.max_iy(), reach_z = 2 * table.max_iz();
    const std::int64_t reach_x =
        2 * std::max<std::int64_t>(table.limit(0, 0), 0);
    for (std::int64_t nx = -reach_x; nx <= reach_x; ++nx) {
        for (std::int64_t ny = -reach_y; ny <= reach_y; ++ny) {
            for (std::int64_t nz = -reach_z; nz <= reach_z; ++nz) {
                if (nx == 0 && ny == 0 && nz == 0) continue;
                const std::int64_t c = pair_count(table, nx, ny, nz);
                if (c > 0) hist[{nx, ny, nz}] = c;
            }
        }
    }
    return hist;
}

}  // namespace ddclock
