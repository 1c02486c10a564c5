#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "ddclock/kernels.hpp"
#include "ddclock/rng.hpp"

using namespace ddclock;
using std::numbers::pi;

namespace {

Vec3 random_direction(SplitMix64& rng, double lo, double hi) {
    // Rejection-sample a direction, scale to |v| in [lo, hi].
    for (;;) {
        const Vec3 v{2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0,
                     2.0 * rng.next_double() - 1.0};
        const double r = v.norm();
        if (r > 0.1 && r < 1.0) {
            const double target = lo + (hi - lo) * rng.next_double();
            return (target / r) * v;
        }
    }
}

}  // namespace

TEST_CASE("f kernel closed-form values") {
    CHECK(f_kernel({pi, 0, 0}) == Catch::Approx(-3.0 / (2.0 * pi * pi)).epsilon(1e-14));
    CHECK(f_kernel({2.0 * pi, 0, 0}) == Catch::Approx(3.0 / (8.0 * pi * pi)).epsilon(1e-14));
    CHECK(f_kernel({0, 0, pi}) == Catch::Approx(3.0 / (pi * pi)).epsilon(1e-14));
}

TEST_CASE("f kernel small-separation limit is 1") {
    // f -> 1 along any direction; at |v| = 1e-4 the value is within 1e-7.
    SplitMix64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const Vec3 v = random_direction(rng, 1e-4, 1e-4);
        CHECK(std::abs(f_kernel(v) - 1.0) < 1e-7);
    }
}

TEST_CASE("f kernel matches its Taylor expansion at v = 1e-2") {
    SplitMix64 rng(12);
    for (int i = 0; i < 20; ++i) {
        const Vec3 v = random_direction(rng, 1e-2, 1e-2);
        const double r = v.norm();
        const double cos2 = (v.z / r) * (v.z / r);
        const double s2 = 1.0 - cos2;
        const double p2 = 3.0 * cos2 - 1.0;
        const double r2 = r * r;
        // 5-term series of sin(v)/v and of sin(v)/v^3 - cos(v)/v^2.
        const double sinc =
            1.0 + r2 * (-1.0 / 6 + r2 * (1.0 / 120 + r2 * (-1.0 / 5040 + r2 / 362880)));
        const double h1 = 1.0 / 3 + r2 * (-1.0 / 30 + r2 * (1.0 / 840 +
                                          r2 * (-1.0 / 45360 + r2 / 3991680)));
        const double series = 1.5 * (s2 * sinc + p2 * h1);
        CHECK(std::abs(f_kernel(v) - series) < 1e-8);
    }
}

TEST_CASE("g kernel closed-form values") {
    CHECK(g_kernel({0, 0, pi}) == Catch::Approx(3.0 / (pi * pi * pi)).epsilon(1e-14));
    CHECK(g_kernel({2.0 * pi, 0, 0}) ==
          Catch::Approx(-3.0 / (4.0 * pi) + 3.0 / (16.0 * pi * pi * pi)).epsilon(1e-14));
}

TEST_CASE("g kernel near-field divergence is accurate") {
    // theta = pi/2, |v| = 1e-3: dominated by +3/(2 v^3).
    // Reference value computed at 30 significant digits.
    const double expected = 1499999250.00056249994791666849;
    CHECK(g_kernel({1e-3, 0, 0}) == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("coincident sites are a domain error") {
    CHECK_THROWS_AS(f_kernel({0, 0, 0}), std::domain_error);
    CHECK_THROWS_AS(g_kernel({0, 0, 0}), std::domain_error);
    CHECK_THROWS_AS(classical_field_z({0, 0, 0}), std::domain_error);
}

TEST_CASE("pair energy values and parity") {
    CHECK(pair_energy({0, 0, pi}) == Catch::Approx(3.0 / (pi * pi * pi)).epsilon(1e-14));
    CHECK(pair_energy({2.0 * pi, 0, 0}) == Catch::Approx(g_kernel({2.0 * pi, 0, 0})).epsilon(1e-14));

    SplitMix64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const Vec3 v = random_direction(rng, 0.3, 12.0);
        const double sym = pair_energy(v) + pair_energy(-v);
        CHECK(sym == Catch::Approx(2.0 * g_kernel(v) * std::cos(v.x)).margin(1e-12));
    }
}

TEST_CASE("quadrature coupling values and parity") {
    CHECK(quadrature_coupling({2.0 * pi, 0, 0}) ==
          Catch::Approx(f_kernel({2.0 * pi, 0, 0})).epsilon(1e-14));
    CHECK(quadrature_coupling({0, 0, pi}) == Catch::Approx(3.0 / (pi * pi)).epsilon(1e-14));

    SplitMix64 rng(14);
    for (int i = 0; i < 100; ++i) {
        const Vec3 v = random_direction(rng, 0.3, 12.0);
        const double anti = quadrature_coupling(v) - quadrature_coupling(-v);
        CHECK(anti == Catch::Approx(2.0 * g_kernel(v) * std::sin(v.x)).margin(1e-12));
    }
}

TEST_CASE("classical field reproduces the quadrature decompositions") {
    // U~ = -3/2 Re[F e^{-i v_x}], D = 3/2 Im[F e^{-i v_x}], with F evaluated
    // from the dipole field expression independently of f and g.
    SplitMix64 rng(15);
    for (int i = 0; i < 100; ++i) {
        const Vec3 v = random_direction(rng, 0.4, 15.0);
        const std::complex<double> fe =
            classical_field_z(v) * std::polar(1.0, -v.x);
        CHECK(-1.5 * fe.real() == Catch::Approx(pair_energy(v)).margin(1e-12));
        CHECK(1.5 * fe.imag() == Catch::Approx(quadrature_coupling(v)).margin(1e-12));
    }
}

TEST_CASE("classical field direct value at (0,0,pi)") {
    const std::complex<double> f = classical_field_z({0, 0, pi});
    CHECK(f.real() == Catch::Approx(-0.064503068866398978).epsilon(1e-13));
    CHECK(f.imag() == Catch::Approx(0.202642367284675543).epsilon(1e-13));
}

TEST_CASE("kernels are rotation-invariant about the polarization axis") {
    SplitMix64 rng(16);
    for (int i = 0; i < 50; ++i) {
        const Vec3 v = random_direction(rng, 0.5, 10.0);
        const double phi = 2.0 * pi * rng.next_double();
        const Vec3 w{v.x * std::cos(phi) - v.y * std::sin(phi),
                     v.x * std::sin(phi) + v.y * std::cos(phi), v.z};
        CHECK(f_kernel(w) == Catch::Approx(f_kernel(v)).margin(1e-12));
        CHECK(g_kernel(w) == Catch::Approx(g_kernel(v)).margin(1e-12));
    }
}

TEST_CASE("kernels depend on the polar angle through cos^2 only") {
    SplitMix64 rng(17);
    for (int i = 0; i < 50; ++i) {
        const Vec3 v = random_direction(rng, 0.5, 10.0);
        const Vec3 w{v.x, v.y, -v.z};  // theta -> pi - theta
        CHECK(f_kernel(w) == Catch::Approx(f_kernel(v)).margin(1e-13));
        CHECK(g_kernel(w) == Catch::Approx(g_kernel(v)).margin(1e-13));
    }
}

TEST_CASE("large-separation asymptotics") {
    SplitMix64 rng(18);
    for (int i = 0; i < 25; ++i) {
        const Vec3 v = random_direction(rng, 1000.0, 1000.0);
        const double r = v.norm();
        const double s2 = 1.0 - (v.z / r) * (v.z / r);
        CHECK(std::abs(f_kernel(v) - 1.5 * s2 * std::sin(r) / r) <= 3.0 / (r * r));
        CHECK(std::abs(g_kernel(v) + 1.5 * s2 * std::cos(r) / r) <= 3.0 / (r * r));
    }
}
