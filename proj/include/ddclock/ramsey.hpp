#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ddclock/errors.hpp"
#include "ddclock/kernels.hpp"
#include "ddclock/shift.hpp"

namespace ddclock {

// Ramsey signal of N non-interacting, independently decaying atoms:
//   S~ = -N [ cos(2Wt)(1 - e^{-t}) + e^{-t} cos^2(2Wt)
//             + e^{-(1+gamma)t/2} sin^2(2Wt) cos(delta t) ]
// (rates in Gamma, times in 1/Gamma).
inline double independent_signal(double n_atoms, double omega_tau, double delta, double gamma_t,
                                 double dephasing) {
    const double c = std::cos(2.0 * omega_tau);
    const double s = std::sin(2.0 * omega_tau);
    return -n_atoms * (c * (1.0 - std::exp(-gamma_t)) + std::exp(-gamma_t) * c * c +
                       std::exp(-(1.0 + dephasing) * gamma_t / 2.0) * s * s *
                           std::cos(delta * gamma_t));
}

enum class CoherenceModel { simplified, full };

// Second-order pair structures entering the perturbative coherence.
struct CoherenceTerms {
    std::complex<double> a_ab;
    std::complex<double> b_ab;
    std::complex<double> c_a;
    std::complex<double> phi_a;
};

namespace detail {

// w(x) = 2 (e^{-x} + x - 1) / x^2, the dephasing window multiplying B_ab.
// Smooth at x = 0 (w -> 1); series branch avoids the 0/0 there.
inline double dephasing_window(double x) {
    if (x < 1e-6) return 1.0 - x / 3.0 + x * x / 12.0;
    return 2.0 * (std::exp(-x) + x - 1.0) / (x * x);
}

}  // namespace detail

// Evaluates the perturbative single-atom coherence <sigma_a^+> just before
// the second Ramsey pulse, for either the simplified (lowest order in gamma,
// eps*Gamma*t accuracy) or the full (second order in Gamma, all orders in
// gamma) expression.  The detuning enters only as the exact phase
// e^{-i delta t}, which amplitude() leaves out so signal assembly can sweep
// delta cheaply.
//
// The probe is a plane wave along +x with k taken equal to k0; the
// accumulated probe-phase error across the sample (delta * L / c in
// physical units) is neglected throughout.
//
// The zero_couplings switch replaces f and g by zero, giving the
// independent-atom reduction used by tests.
class CoherenceEvaluator {
  public:
    CoherenceEvaluator(const AtomSample& sample, const RamseyParams& params, CoherenceModel model,
                       bool zero_couplings = false)
        : positions_(sample.positions), params_(params), model_(model) {
        validate_ramsey(params);
        const std::size_t n = positions_.size();
        if (n == 0) throw std::domain_error("CoherenceEvaluator: empty sample");
        f_.assign(n * n, 0.0);
        g_.assign(n * n, 0.0);
        phase_.assign(n * n, {1.0, 0.0});
        sum_d_.assign(n, 0.0);
        sum_fg_phase_.assign(n, {0.0, 0.0});
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                const Vec3 v = positions_[a] - positions_[b];
                if (v.norm2() == 0.0) {
                    throw std::domain_error("CoherenceEvaluator: coincident atoms");
                }
                const double f = zero_couplings ? 0.0 : f_kernel(v);
                const double g = zero_couplings ? 0.0 : g_kernel(v);
                f_[a * n + b] = f_[b * n + a] = f;
                g_[a * n + b] = g_[b * n + a] = g;
                phase_[a * n + b] = std::polar(1.0, v.x);   // e^{i k x_ab}
                phase_[b * n + a] = std::polar(1.0, -v.x);
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == a) continue;
                const double f = f_[a * n + j];
                const double g = g_[a * n + j];
                const std::complex<double> ph = phase_[a * n + j];
                sum_d_[a] += f * ph.real() + g * ph.imag();  // D_aj
                sum_fg_phase_[a] += std::complex<double>(f, -g) * ph;
            }
        }
    }

    std::size_t size() const { return positions_.size(); }
    double sin_2wt() const { return std::sqrt(1.0 - params_.pulse_error * params_.pulse_error); }

    // Pair structures for atom a against atom b (phi_a sums over all b).
    CoherenceTerms terms(std::size_t a, std::size_t b) const {
        CoherenceTerms out = terms_no_phi(a, b);
        out.c_a = sum_fg_phase_[a] * params_.pulse_error;
        out.phi_a = phi(a);
        return out;
    }

    // phi_a of the simplified coherence.
    std::complex<double> phi(std::size_t a) const {
        const std::size_t n = positions_.size();
        const double eps = params_.pulse_error;
        const double t = params_.interrogation;
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            const double f = f_[a * n + b];
            const double g = g_[a * n + b];
            const std::complex<double> ph = phase_[a * n + b];
            const double d_ab = f * ph.real() + g * ph.imag();
            const std::complex<double> inner =
                1.0 + 0.5 * std::complex<double>(f, g) * std::conj(ph) +
                0.5 * (sum_d_[a] - d_ab);
            acc += std::complex<double>(f, -g) * ph * (0.5 * t * eps + 0.25 * t * t * inner);
        }
        return acc;
    }

    // <sigma_a^+> with the e^{-i delta t} factor removed.
    std::complex<double> amplitude(std::size_t a) const {
        const double t = params_.interrogation;
        const double gt = params_.dephasing * t;
        const std::complex<double> pulse_phase = std::polar(1.0, -positions_[a].x);
        const double front = 0.5 * sin_2wt();
        if (model_ == CoherenceModel::simplified) {
            const std::complex<double> bracket = 1.0 - 0.5 * t + 0.125 * t * t - phi(a);
            return front * pulse_phase * bracket;
        }
        // Full expression, all orders in gamma.  Relative to the printed
        // form, the second-order interaction term enters as
        // -(t^2/2) sum_b (f - i g)(A_ab + B_ab w(gamma t)); this sign
        // convention is the one consistent with the simplified expression,
        // with the exact two-atom solution, and with the master-equation
        // oracle.
        const std::size_t n = positions_.size();
        const double w = detail::dephasing_window(gt);
        std::complex<double> pair_term{0.0, 0.0};
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            const CoherenceTerms tm = terms_no_phi(a, b);
            const double f = f_[a * n + b];
            const double g = g_[a * n + b];
            pair_term += std::complex<double>(f, -g) * (tm.a_ab + tm.b_ab * w);
        }
        const std::complex<double> c_a = sum_fg_phase_[a] * params_.pulse_error;
        const std::complex<double> bracket =
            1.0 - 0.5 * t * (1.0 + c_a) + 0.125 * t * t * (1.0 + c_a) -
            0.5 * t * t * pair_term;
        return front * pulse_phase * std::exp(-0.5 * gt) * bracket;
    }

    // Sum over atoms of e^{i k x_a} <sigma_a^+> at delta = 0; the signal at
    // detuning delta is -2 sin(2Wt) Re[ Z e^{-i delta t} ].
    std::complex<double> signal_amplitude() const {
        std::complex<double> z{0.0, 0.0};
        for (std::size_t a = 0; a < positions_.size(); ++a) {
            z += std::polar(1.0, positions_[a].x) * amplitude(a);
        }
        return z;
    }

  private:
    CoherenceTerms terms_no_phi(std::size_t a, std::size_t b) const {
        const std::size_t n = positions_.size();
        const double eps = params_.pulse_error;
        CoherenceTerms out;
        const double f = f_[a * n + b];
        const double g = g_[a * n + b];
        const std::complex<double> ph = phase_[a * n + b];
        // sum_{j != a,b} (f_bj - i g_bj) e^{i k x_aj}
        //   = e^{i k x_ab} [ G_b - (f_ab - i g_ab) e^{-i k x_ab} ]
        const std::complex<double> j_sum_b =
            ph * (sum_fg_phase_[b] - std::complex<double>(f, -g) * std::conj(ph));
        out.a_ab = -0.75 * ph * eps + 0.5 * ph + 0.25 * std::complex<double>(f, g) -
                   0.5 * f * eps - 0.25 * j_sum_b * eps * eps;
        const double d_ab = f * ph.real() + g * ph.imag();
        out.b_ab = 0.25 * ph * (1.0 - eps * eps) * (sum_d_[a] - d_ab);
        return out;
    }

    std::vector<Vec3> positions_;
    RamseyParams params_;
    CoherenceModel model_;
    std::vector<double> f_, g_;
    std::vector<std::complex<double>> phase_;
    std::vector<double> sum_d_;                         // S_a = sum_{j != a} D_aj
    std::vector<std::complex<double>> sum_fg_phase_;    // G_a = sum_{j != a} (f - i g) e^{i x_aj}
};

inline std::complex<double> coherence_simplified(const AtomSample& sample,
                                                 const RamseyParams& params, std::size_t atom) {
    CoherenceEvaluator ev(sample, params, CoherenceModel::simplified);
    return ev.amplitude(atom) *
           std::polar(1.0, -params.detuning * params.interrogation);
}

inline std::complex<double> coherence_perturbative_full(const AtomSample& sample,
                                                        const RamseyParams& params,
                                                        std::size_t atom) {
    CoherenceEvaluator ev(sample, params, CoherenceModel::full);
    return ev.amplitude(atom) *
           std::polar(1.0, -params.detuning * params.interrogation);
}

struct SignalCurve {
    std::vector<double> detuning;  // delta / Gamma, strictly increasing
    std::vector<double> signal;
    double contrast = 0.0;         // max - min over the grid
};

namespace detail {

inline void validate_grid(const std::vector<double>& grid) {
    if (grid.size() < 5) throw std::domain_error("signal grid needs at least 5 points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::domain_error("signal grid must be strictly increasing");
        }
    }
}

inline void finalize_curve(SignalCurve& curve) {
    double lo = curve.signal.front(), hi = curve.signal.front();
    for (double s : curve.signal) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    curve.contrast = hi - lo;
}

}  // namespace detail

// Interaction-sensitive Ramsey signal S(delta) = -2 sin(2Wt) Re sum_a
// e^{i k x_a} <sigma_a^+> on the given detuning grid.
inline SignalCurve effective_signal(const AtomSample& sample, const RamseyParams& params,
                                    const std::vector<double>& grid,
                                    CoherenceModel model = CoherenceModel::simplified) {
    detail::validate_grid(grid);
    CoherenceEvaluator ev(sample, params, model);
    const std::complex<double> z = ev.signal_amplitude();
    const double t = params.interrogation;
    SignalCurve curve;
    curve.detuning = grid;
    curve.signal.reserve(grid.size());
    for (double d : grid) {
        curve.signal.push_back(-2.0 * ev.sin_2wt() * (z * std::polar(1.0, -d * t)).real());
    }
    detail::finalize_curve(curve);
    return curve;
}

struct PeakShiftResult {
    double delta_p = 0.0;      // stationary point of S nearest delta = 0
    double uncertainty = 0.0;  // numerical location estimate
};

namespace detail {

// Vertex of the parabola through three points (quadratic refinement).
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curv = (d1 - d0) / (x2 - x0);
    if (curv == 0.0) throw numeric_error("parabola_vertex: degenerate (collinear) points");
    return 0.5 * (x0 + x1 - d0 / curv);
}

}  // namespace detail

// Stationary point nearest delta = 0 from sampled fringe data.  The grid
// bracket around the sign change of the discrete slope is refined by a
// three-point quadratic fit; the uncertainty estimate compares the fit
// against a doubled-stencil fit.
inline PeakShiftResult extract_peak_shift(const SignalCurve& curve,
                                          double contrast_threshold = 0.0) {
    detail::validate_grid(curve.detuning);
    if (curve.contrast <= contrast_threshold) {
        throw numeric_error("extract_peak_shift: fringe contrast below threshold");
    }
    const auto& x = curve.detuning;
    const auto& y = curve.signal;
    const std::size_t n = x.size();

    std::size_t best = n;  // index i of the extremum cell: slope flips between [i-1,i] and [i,i+1]
    double best_dist = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double s0 = y[i] - y[i - 1];
        const double s1 = y[i + 1] - y[i];
        if (s0 == 0.0 && s1 == 0.0) continue;
        if (s0 * s1 <= 0.0) {
            const double dist = std::abs(x[i]);
            if (best == n || dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
    }
    if (best == n) {
        throw numeric_error("extract_peak_shift: no stationary point bracketed in grid");
    }

    PeakShiftResult out;
    out.delta_p = detail::parabola_vertex(x[best - 1], y[best - 1], x[best], y[best], x[best + 1],
                                          y[best + 1]);
    if (best >= 2 && best + 2 < n) {
        const double wide = detail::parabola_vertex(x[best - 2], y[best - 2], x[best], y[best],
                                                    x[best + 2], y[best + 2]);
        out.uncertainty = std::abs(wide - out.delta_p) / 3.0;
    } else {
        out.uncertainty = 0.5 * (x[best + 1] - x[best - 1]);
    }
    return out;
}

// Stationary point nearest delta = 0 of a signal closure, via root-bracketing
// of a wide central-difference derivative (which is exact in location for
// fringes of the form A cos(dt) + B sin(dt)) followed by secant refinement.
inline PeakShiftResult extract_peak_shift(const std::function<double(double)>& signal,
                                          double gamma_t, double half_width) {
    if (!(gamma_t > 0.0) || !(half_width > 0.0)) {
        throw std::domain_error("extract_peak_shift: need positive interrogation and search width");
    }
    const double h = std::min(0.35 / gamma_t, 0.25 * half_width);
    auto deriv = [&](double d) { return (signal(d + h) - signal(d - h)) / (2.0 * h); };

    // Expand outward from 0 looking for the nearest sign change.
    const int rings = 16;
    const double step = half_width / rings;
    double lo = 0.0, hi = 0.0;
    {
        double d0 = deriv(0.0);
        double left = d0, right = d0;
        bool found = false;
        for (int k = 1; k <= rings && !found; ++k) {
            const double xr = k * step, xl = -k * step;
            const double dr = deriv(xr);
            if (right * dr <= 0.0) {  // covers an exact zero at either end
                lo = xr - step;
                hi = xr;
                found = true;
                break;
            }
            right = dr;
            const double dl = deriv(xl);
            if (left * dl <= 0.0) {
                lo = xl;
                hi = xl + step;
                found = true;
                break;
            }
            left = dl;
        }
        if (!found) {
            throw numeric_error(
                "extract_peak_shift: derivative does not change sign in search range");
        }
    }

    double flo = deriv(lo), fhi = deriv(hi);
    for (int i = 0; i < 8; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = deriv(mid);
        if (flo * fmid <= 0.0) {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    // Secant polish inside the bracket.
    double x0 = lo, f0 = flo, x1 = hi, f1 = fhi;
    for (int i = 0; i < 40 && f1 != f0; ++i) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= lo && x2 <= hi)) break;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = deriv(x2);
        if (std::abs(x1 - x0) < 1e-13 * (1.0 + std::abs(x1))) break;
    }
    return {x1, std::max(std::abs(x1 - x0), 1e-15 * half_width)};
}

}  // namespace ddclock
