#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddclock/errors.hpp"
#include "ddclock/kernels.hpp"
#include "ddclock/ramsey.hpp"
#include "ddclock/shift.hpp"

namespace ddclock {

using DensityMatrix = Eigen::MatrixXcd;

// Exact master-equation generator for N two-level atoms in the frame
// rotating at the probe frequency (detuning delta replaces the bare
// transition frequency):
//
//   drho/dt = -i (H_eff rho - rho H_eff^+)
//             + sum_{a,b} f_ab sigma_b^- rho sigma_a^+
//             + (gamma/4) sum_a (sigma_a^z rho sigma_a^z - rho),
//
//   H_eff = -(delta/2) sum_a sigma_a^z + (1/2) sum_{a != b} g_ab s_a^+ s_b^-
//           - (i/2) sum_{a,b} f_ab s_a^+ s_b^-,
//
// with f_aa = 1 (independent decay) and rates in Gamma.  Basis states are
// bit masks: bit a set means atom a excited.
class Liouvillian {
  public:
    // zero_couplings drops the off-diagonal f and g (keeping independent
    // decay), giving the exactly decoupled reference used by tests.
    Liouvillian(const AtomSample& sample, const RamseyParams& params, std::size_t n_max = 6,
                bool zero_couplings = false)
        : n_(sample.positions.size()), gamma_(params.dephasing) {
        validate_ramsey(params);
        if (n_ == 0) throw std::domain_error("Liouvillian: empty sample");
        if (n_ > n_max) {
            throw capacity_error("Liouvillian: " + std::to_string(n_) +
                                 " atoms exceeds exact-oracle capacity of " +
                                 std::to_string(n_max));
        }
        dim_ = std::size_t{1} << n_;
        fmat_.assign(n_ * n_, 0.0);
        gmat_.assign(n_ * n_, 0.0);
        for (std::size_t a = 0; a < n_; ++a) fmat_[a * n_ + a] = 1.0;
        for (std::size_t a = 0; a < n_; ++a) {
            for (std::size_t b = a + 1; b < n_; ++b) {
                const Vec3 v = sample.positions[a] - sample.positions[b];
                if (v.norm2() == 0.0) throw std::domain_error("Liouvillian: coincident atoms");
                if (zero_couplings) continue;
                fmat_[a * n_ + b] = fmat_[b * n_ + a] = f_kernel(v);
                gmat_[a * n_ + b] = gmat_[b * n_ + a] = g_kernel(v);
            }
        }

        heff_ = DensityMatrix::Zero(dim_, dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            const int excited = std::popcount(i);
            heff_(i, i) = std::complex<double>(
                -0.5 * params.detuning * (2.0 * excited - static_cast<double>(n_)),
                -0.5 * excited);  // -(i/2) sum_a f_aa |e><e|_a
            for (std::size_t b = 0; b < n_; ++b) {
                if (!(i >> b & 1U)) continue;
                for (std::size_t a = 0; a < n_; ++a) {
                    if (a == b || (i >> a & 1U)) continue;
                    const std::size_t j = (i & ~(std::size_t{1} << b)) | (std::size_t{1} << a);
                    heff_(j, i) += std::complex<double>(0.5 * gmat_[a * n_ + b],
                                                        -0.5 * fmat_[a * n_ + b]);
                }
            }
        }
        heff_dag_ = heff_.adjoint();
    }

    std::size_t atoms() const { return n_; }
    std::size_t dim() const { return dim_; }
    double f_coupling(std::size_t a, std::size_t b) const { return fmat_[a * n_ + b]; }
    double g_coupling(std::size_t a, std::size_t b) const { return gmat_[a * n_ + b]; }

    DensityMatrix apply(const DensityMatrix& rho) const {
        const std::complex<double> mi(0.0, -1.0);
        DensityMatrix out = mi * (heff_ * rho - rho * heff_dag_);
        // Recycling term sum_{a,b} f_ab sigma_b^- rho sigma_a^+.
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j < dim_; ++j) {
                std::complex<double> acc(0.0, 0.0);
                for (std::size_t b = 0; b < n_; ++b) {
                    if (i >> b & 1U) continue;
                    const std::size_t ib = i | (std::size_t{1} << b);
                    for (std::size_t a = 0; a < n_; ++a) {
                        if (j >> a & 1U) continue;
                        acc += fmat_[a * n_ + b] * rho(ib, j | (std::size_t{1} << a));
                    }
                }
                out(i, j) += acc;
                if (gamma_ != 0.0 && i != j) {
                    out(i, j) -= 0.5 * gamma_ * std::popcount(i ^ j) * rho(i, j);
                }
            }
        }
        return out;
    }

  private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    double gamma_ = 0.0;
    std::vector<double> fmat_, gmat_;
    DensityMatrix heff_, heff_dag_;
};

inline Liouvillian build_liouvillian(const AtomSample& sample, const RamseyParams& params,
                                     std::size_t n_max = 6) {
    return Liouvillian(sample, params, n_max);
}

enum class PulseDirection { forward, inverse };

// Conjugates rho by the product unitary of per-atom rotations
//   U_a = [[cos Wt, -e^{-i k x_a} sin Wt], [e^{i k x_a} sin Wt, cos Wt]]
// (basis order ground, excited), applied one atom at a time.
inline DensityMatrix apply_pulse(const DensityMatrix& rho, double omega_tau,
                                 const std::vector<Vec3>& positions, PulseDirection dir) {
    const std::size_t n = positions.size();
    const std::size_t dim = std::size_t{1} << n;
    if (rho.rows() != static_cast<Eigen::Index>(dim)) {
        throw std::domain_error("apply_pulse: density matrix dimension mismatch");
    }
    DensityMatrix out = rho;
    const double c = std::cos(omega_tau);
    const double s = std::sin(omega_tau);
    for (std::size_t a = 0; a < n; ++a) {
        std::complex<double> uge = -s * std::polar(1.0, -positions[a].x);
        std::complex<double> ueg = s * std::polar(1.0, positions[a].x);
        if (dir == PulseDirection::inverse) {
            uge = -uge;  // U^+ swaps the off-diagonal signs
            ueg = -ueg;
        }
        const std::size_t bit = std::size_t{1} << a;
        // Left multiply: rows mix within each (i, i|bit) pair.
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & bit) continue;
            for (std::size_t j = 0; j < dim; ++j) {
                const std::complex<double> rg = out(i, j);
                const std::complex<double> re = out(i | bit, j);
                out(i, j) = c * rg + uge * re;
                out(i | bit, j) = ueg * rg + c * re;
            }
        }
        // Right multiply by U^+: columns mix with conjugated coefficients.
        for (std::size_t j = 0; j < dim; ++j) {
            if (j & bit) continue;
            for (std::size_t i = 0; i < dim; ++i) {
                const std::complex<double> rg = out(i, j);
                const std::complex<double> re = out(i, j | bit);
                out(i, j) = c * rg + std::conj(uge) * re;
                out(i, j | bit) = std::conj(ueg) * rg + c * re;
            }
        }
    }
    return out;
}

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct DormandPrince {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace detail

// Integrates drho/dt = L[rho] over [0, gamma_t] with adaptive Dormand-Prince
// 5(4) steps at local tolerance `tol` (mixed absolute/relative).
inline DensityMatrix evolve(const DensityMatrix& rho0, const Liouvillian& liou, double gamma_t,
                            double tol = 1e-10) {
    if (gamma_t < 0.0) throw std::domain_error("evolve: negative interrogation time");
    if (gamma_t == 0.0) return rho0;
    using D = detail::DormandPrince;

    DensityMatrix y = rho0;
    DensityMatrix k1 = liou.apply(y);
    double t = 0.0;
    double h = std::min(gamma_t, 0.1);
    const double scale = std::max(1.0, rho0.cwiseAbs().maxCoeff());
    int rejected_in_a_row = 0;

    while (t < gamma_t) {
        h = std::min(h, gamma_t - t);
        const DensityMatrix k2 = liou.apply(y + h * D::a21 * k1);
        const DensityMatrix k3 = liou.apply(y + h * (D::a31 * k1 + D::a32 * k2));
        const DensityMatrix k4 = liou.apply(y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
        const DensityMatrix k5 =
            liou.apply(y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
        const DensityMatrix k6 = liou.apply(
            y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
        const DensityMatrix ynew =
            y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
        const DensityMatrix k7 = liou.apply(ynew);
        const DensityMatrix err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 +
                                       D::e6 * k6 + D::e7 * k7);
        const double err_norm = err.cwiseAbs().maxCoeff() / (tol * scale);
        if (err_norm <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            rejected_in_a_row = 0;
        } else if (++rejected_in_a_row > 60) {
            throw numeric_error("evolve: step control failed at t = " + std::to_string(t) +
                                ", h = " + std::to_string(h) +
                                ", err/tol = " + std::to_string(err_norm));
        }
        const double factor =
            std::clamp(0.9 * std::pow(err_norm > 0 ? err_norm : 1e-10, -0.2), 0.2, 5.0);
        h *= factor;
        if (h < 1e-14 * gamma_t) {
            throw numeric_error("evolve: step size underflow at t = " + std::to_string(t));
        }
    }
    return y;
}

inline std::complex<double> coherence_expectation(const DensityMatrix& rho, std::size_t atom) {
    const std::size_t dim = rho.rows();
    const std::size_t bit = std::size_t{1} << atom;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & bit) acc += rho(i & ~bit, i);
    }
    return acc;
}

inline double inversion_expectation(const DensityMatrix& rho, std::size_t n_atoms) {
    double acc = 0.0;
    const std::size_t dim = rho.rows();
    for (std::size_t i = 0; i < dim; ++i) {
        acc += rho(i, i).real() * (2.0 * std::popcount(i) - static_cast<double>(n_atoms));
    }
    return acc;
}

struct OracleSignals {
    SignalCurve s_tilde;  // inversion after the closing pulse
    SignalCurve s_eff;    // Re sum_a e^{i k x_a} <sigma_a^+> route, pre-pulse
};

namespace detail {

struct OracleRun {
    double s_tilde;
    double s_eff;
};

inline OracleRun run_ramsey_once(const AtomSample& sample, const RamseyParams& params,
                                 double delta, std::size_t n_max, double tol) {
    RamseyParams p = params;
    p.detuning = delta;
    const Liouvillian liou(sample, p, n_max);
    const std::size_t n = sample.positions.size();
    const std::size_t dim = std::size_t{1} << n;
    const double omega_tau = 0.5 * std::acos(std::clamp(params.pulse_error, -1.0, 1.0));

    DensityMatrix rho = DensityMatrix::Zero(dim, dim);
    rho(0, 0) = 1.0;
    rho = apply_pulse(rho, omega_tau, sample.positions, PulseDirection::forward);
    rho = evolve(rho, liou, params.interrogation, tol);

    std::complex<double> z(0.0, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        z += std::polar(1.0, sample.positions[a].x) * coherence_expectation(rho, a);
    }
    const double s_eff = -2.0 * std::sin(2.0 * omega_tau) * z.real();

    rho = apply_pulse(rho, omega_tau, sample.positions, PulseDirection::inverse);
    return {inversion_expectation(rho, n), s_eff};
}

}  // namespace detail

// Full Ramsey protocol (pulse, free evolution under the master equation,
// inverse pulse, inversion measurement) across a detuning grid.  Also
// returns the interaction-sensitive signal S computed from the pre-pulse
// coherences, so the two signal definitions can be cross-checked.
inline OracleSignals ramsey_experiment(const AtomSample& sample, const RamseyParams& params,
                                       const std::vector<double>& grid, std::size_t n_max = 6,
                                       double tol = 1e-10) {
    detail::validate_grid(grid);
    OracleSignals out;
    out.s_tilde.detuning = grid;
    out.s_eff.detuning = grid;
    for (double d : grid) {
        const auto run = detail::run_ramsey_once(sample, params, d, n_max, tol);
        out.s_tilde.signal.push_back(run.s_tilde);
        out.s_eff.signal.push_back(run.s_eff);
    }
    detail::finalize_curve(out.s_tilde);
    detail::finalize_curve(out.s_eff);
    return out;
}

// Ground-truth Ramsey peak shift: stationary point of the exact signal
// nearest delta = 0, located on the measured-inversion route.
inline PeakShiftResult oracle_peak_shift(const AtomSample& sample, const RamseyParams& params,
                                         std::size_t n_max = 6, double tol = 1e-10) {
    if (!(params.interrogation > 0.0)) {
        throw std::domain_error("oracle_peak_shift: needs interrogation time > 0");
    }
    auto signal = [&](double delta) {
        return detail::run_ramsey_once(sample, params, delta, n_max, tol).s_tilde;
    };
    const double half_width = 0.5 * std::numbers::pi / params.interrogation;
    return extract_peak_shift(signal, params.interrogation, half_width);
}

}  // namespace ddclock
