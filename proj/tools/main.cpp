// Command-line front end: parameter sweeps, single-point shifts, occupancy
// statistics, resonance tables, and exact-oracle comparisons.  All lengths
// are in 1/k0 units, rates in Gamma, angles in units of pi where flagged.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ddclock/ddclock.hpp"

using namespace ddclock;
using std::numbers::pi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitNumeric = 2;

struct SweepConfig {
    double theta_min_pi = 0.05;
    double theta_max_pi = 0.25;
    int points = 200;
    double kappa = 1.07;
    double mean_atoms = 1e4;
    double filling = 1.0;
    double pulse_error = 0.1;
    double gamma_t = 0.0;
    bool first_order = false;
    std::size_t max_brute = 3000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
};

struct SweepRow {
    double theta_pi;
    double shift0_scaled;
    double shift1_scaled;
    double mean_scaled;
    double stddev_scaled;
};

// One sweep point.  shift0 and the mean/stddev columns are emitted in the
// pulse-error-scaled form 2 delta/(Gamma eps), which is exact by linearity,
// so they are computed at eps = 1; the first-order column is 2 delta_p^1 /
// Gamma at the requested Gamma t (it does not scale with eps).
SweepRow sweep_point(double theta, const SweepConfig& cfg, std::uint64_t point_seed) {
    const auto geom = build_six_beam_lattice(theta, cfg.kappa);
    SweepRow row{};
    row.theta_pi = theta / pi;
    const auto perfect = make_sphere_profile(geom, cfg.mean_atoms, 1.0);
    row.shift0_scaled = 2.0 * shift_restructured_perfect(geom, perfect, 1.0).zeroth;
    if (cfg.filling < 1.0) {
        const auto profile = make_sphere_profile(geom, cfg.mean_atoms, cfg.filling);
        row.mean_scaled = 2.0 * mean_shift_imperfect(geom, profile, 1.0);
        row.stddev_scaled = 2.0 * std::sqrt(variance_diffuse(geom, profile, 1.0));
    } else {
        row.mean_scaled = row.shift0_scaled;
        row.stddev_scaled = 0.0;
    }
    if (cfg.first_order && cfg.gamma_t > 0.0) {
        const auto profile = make_sphere_profile(geom, cfg.mean_atoms, cfg.filling);
        const auto sites = enumerate_sites(geom, profile);
        const AtomSample sample = cfg.filling < 1.0
                                      ? sample_occupancy(sites, cfg.filling, point_seed)
                                      : full_sample(sites);
        const auto r = shift_brute(sample, {0.0, cfg.gamma_t, 0.0, 0.0}, cfg.max_brute);
        row.shift1_scaled = 2.0 * r.first;
    }
    return row;
}

void write_sweep_rows(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "theta_over_pi,shift0_scaled,shift1_scaled,mean_shift_scaled,stddev_scaled\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n", r.theta_pi,
                      r.shift0_scaled, r.shift1_scaled, r.mean_scaled, r.stddev_scaled);
        os << buf;
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::domain_error("cannot open output file: " + path);
    return os;
}

// Accepts "0,0,pi", "1.5,-2pi,0.25pi", plain numbers, or "pi/2" per component.
Vec3 parse_vec3(const std::string& text) {
    std::array<double, 3> v{};
    std::stringstream ss(text);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw std::domain_error("expected exactly 3 components in '" + text + "'");
        double sign = 1.0;
        std::string s = part;
        if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
            if (s[0] == '-') sign = -1.0;
            s.erase(0, 1);
        }
        double value = 0.0;
        const auto pi_pos = s.find("pi");
        if (pi_pos != std::string::npos) {
            const std::string pre = s.substr(0, pi_pos);
            const std::string post = s.substr(pi_pos + 2);
            value = pre.empty() ? pi : std::stod(pre) * pi;
            if (!post.empty()) {
                if (post[0] != '/') throw std::domain_error("bad component '" + part + "'");
                value /= std::stod(post.substr(1));
            }
        } else {
            value = std::stod(s);
        }
        v[static_cast<std::size_t>(i++)] = sign * value;
    }
    if (i != 3) throw std::domain_error("expected exactly 3 components in '" + text + "'");
    return {v[0], v[1], v[2]};
}

AtomSample lattice_sites_sample(std::size_t n, std::uint64_t seed) {
    // n distinct occupied sites of the default (theta = 0.15 pi, kappa =
    // 1.07) lattice drawn from a small index cube.
    const auto geom = build_six_beam_lattice(0.15 * pi, 1.07);
    SplitMix64 rng(seed);
    AtomSample s;
    s.seed = seed;
    std::vector<std::array<int, 3>> taken;
    while (s.positions.size() < n) {
        const int ix = static_cast<int>(rng.next_double() * 7) - 3;
        const int iy = static_cast<int>(rng.next_double() * 7) - 3;
        const int iz = static_cast<int>(rng.next_double() * 7) - 3;
        bool dup = false;
        for (const auto& t : taken) dup |= (t == std::array<int, 3>{ix, iy, iz});
        if (dup) continue;
        taken.push_back({ix, iy, iz});
        s.positions.push_back({ix * geom.ax, iy * geom.ay, iz * geom.az});
    }
    return s;
}

AtomSample read_positions_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::domain_error("cannot open positions file: " + path);
    AtomSample s;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_of("0123456789") == std::string::npos) continue;  // header
        s.positions.push_back(parse_vec3(line));
    }
    if (s.positions.empty()) throw std::domain_error("no positions in " + path);
    return s;
}

int dispatch(CLI::App& app, int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dipole-dipole frequency shifts of a lattice-clock Ramsey line"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML/INI file (command line wins)");
    try {
        return dispatch(app, argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: [config] " << e.what() << "\n";
        return kExitUser;
    } catch (const capacity_error& e) {
        std::cerr << "error: [capacity] " << e.what() << "\n";
        return kExitNumeric;
    } catch (const numeric_error& e) {
        std::cerr << "error: [numeric] " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::domain_error& e) {
        std::cerr << "error: [domain] " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "error: [numeric] " << e.what() << "\n";
        return kExitNumeric;
    }
}

namespace {

int dispatch(CLI::App& app, int argc, char** argv) {
    // --- sweep ---------------------------------------------------------
    SweepConfig sw;
    auto* sweep = app.add_subcommand("sweep", "theta sweep of the line shift (CSV)");
    sweep->add_option("--theta-min", sw.theta_min_pi, "start angle, units of pi");
    sweep->add_option("--theta-max", sw.theta_max_pi, "end angle, units of pi");
    sweep->add_option("--points", sw.points, "number of sweep points")->check(CLI::PositiveNumber);
    sweep->add_option("--kappa", sw.kappa, "k0/kL wavelength ratio");
    sweep->add_option("--n-atoms", sw.mean_atoms, "mean atom count <N>");
    sweep->add_option("--filling", sw.filling, "site occupation probability P");
    sweep->add_option("--eps", sw.pulse_error, "pulse error cos(2 W tau)");
    sweep->add_option("--gt", sw.gamma_t, "interrogation time Gamma*t");
    sweep->add_flag("--first-order", sw.first_order,
                    "also evaluate the first-order (Gamma t) term by the O(N^2) path");
    sweep->add_option("--max-brute", sw.max_brute, "atom guard for the O(N^2) path");
    sweep->add_option("--seed", sw.seed, "occupancy realization seed");
    sweep->add_option("--threads", sw.threads, "worker threads across sweep points")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--out", sw.out, "output CSV path (default stdout)");

    // --- shift ---------------------------------------------------------
    double sh_theta_pi = 0.15;
    std::string sh_method = "auto";
    SweepConfig sh;
    auto* shift = app.add_subcommand("shift", "line shift at a single lattice angle");
    shift->add_option("--theta", sh_theta_pi, "lattice angle, units of pi")->required();
    shift->add_option("--kappa", sh.kappa, "k0/kL wavelength ratio");
    shift->add_option("--n-atoms", sh.mean_atoms, "mean atom count <N>");
    shift->add_option("--filling", sh.filling, "site occupation probability P");
    shift->add_option("--eps", sh.pulse_error, "pulse error cos(2 W tau)");
    shift->add_option("--gt", sh.gamma_t, "interrogation time Gamma*t");
    shift->add_option("--method", sh_method, "brute | restructured | auto")
        ->check(CLI::IsMember({"brute", "restructured", "auto"}));
    shift->add_option("--max-brute", sh.max_brute, "atom guard for the O(N^2) path");
    shift->add_option("--seed", sh.seed, "occupancy realization seed");
    shift->add_option("--out", sh.out, "write the equivalent single-point sweep CSV here");

    // --- variance ------------------------------------------------------
    double var_theta_pi = 0.125;
    std::string var_mode = "diffuse";
    SweepConfig va;
    std::size_t var_max_sites = 10000;
    auto* variance = app.add_subcommand("variance", "occupancy variance of the shift");
    variance->add_option("--theta", var_theta_pi, "lattice angle, units of pi")->required();
    variance->add_option("--kappa", va.kappa, "k0/kL wavelength ratio");
    variance->add_option("--n-atoms", va.mean_atoms, "mean atom count <N>");
    variance->add_option("--filling", va.filling, "site occupation probability P");
    variance->add_option("--eps", va.pulse_error, "pulse error cos(2 W tau)");
    variance->add_option("--mode", var_mode, "full | diffuse | both")
        ->check(CLI::IsMember({"full", "diffuse", "both"}));
    variance->add_option("--max-sites", var_max_sites, "site guard for the full evaluation");

    // --- resonances ----------------------------------------------------
    double rs_min_pi = 0.05, rs_max_pi = 0.25, rs_kappa = 1.07;
    int rs_max_index = 4;
    std::string rs_out;
    auto* resonances = app.add_subcommand("resonances", "resonant (large-shift) lattice angles");
    resonances->add_option("--kappa", rs_kappa, "k0/kL wavelength ratio");
    resonances->add_option("--theta-min", rs_min_pi, "range start, units of pi");
    resonances->add_option("--theta-max", rs_max_pi, "range end, units of pi");
    resonances->add_option("--max-index", rs_max_index, "reciprocal index bound");
    resonances->add_option("--out", rs_out, "output CSV path (default stdout)");

    // --- zero ----------------------------------------------------------
    double z_min_pi = 0.116, z_max_pi = 0.180, z_kappa = 1.07;
    double z_atoms = 1e4, z_filling = 1.0;
    auto* zero = app.add_subcommand("zero", "shift-cancelling angle inside a bracket");
    zero->add_option("--theta-min", z_min_pi, "bracket start, units of pi");
    zero->add_option("--theta-max", z_max_pi, "bracket end, units of pi");
    zero->add_option("--kappa", z_kappa, "k0/kL wavelength ratio");
    zero->add_option("--n-atoms", z_atoms, "mean atom count <N>");
    zero->add_option("--filling", z_filling, "site occupation probability P");

    // --- oracle --------------------------------------------------------
    std::size_t or_n = 2;
    std::string or_sep, or_positions, or_out;
    double or_eps = 0.0, or_gt = 0.01, or_gamma = 0.0, or_span = 0.0;
    int or_points = 101;
    std::uint64_t or_seed = 1;
    std::size_t or_nmax = 6;
    auto* oracle = app.add_subcommand(
        "oracle", "exact small-N master-equation Ramsey signal and closed-form comparison");
    oracle->add_option("--n", or_n, "atom count (random lattice sites unless --sep/--positions)");
    oracle->add_option("--sep", or_sep, "two-atom separation x,y,z (k0 units; 'pi' accepted)");
    oracle->add_option("--positions", or_positions, "CSV of positions x,y,z");
    oracle->add_option("--eps", or_eps, "pulse error cos(2 W tau)");
    oracle->add_option("--gt", or_gt, "interrogation time Gamma*t");
    oracle->add_option("--gamma", or_gamma, "dephasing gamma/Gamma");
    oracle->add_option("--points", or_points, "detuning grid points");
    oracle->add_option("--span", or_span, "half-width of the detuning grid (default 0.45*pi/gt)");
    oracle->add_option("--seed", or_seed, "site-draw seed");
    oracle->add_option("--n-max", or_nmax, "exact-oracle capacity guard");
    oracle->add_option("--out", or_out, "signal CSV path (default stdout)");

    // --- kernels -------------------------------------------------------
    std::string kr_v;
    auto* kernels = app.add_subcommand("kernels", "dipole kernels at one separation");
    kernels->add_option("--v", kr_v, "separation x,y,z (k0 units; 'pi' accepted)")->required();

    // --- sites ---------------------------------------------------------
    double st_theta_pi = 0.15, st_kappa = 1.07, st_atoms = 100.0, st_filling = 1.0;
    std::string st_out;
    auto* sites_cmd = app.add_subcommand("sites", "lattice sites inside the sample sphere (CSV)");
    sites_cmd->add_option("--theta", st_theta_pi, "lattice angle, units of pi")->required();
    sites_cmd->add_option("--kappa", st_kappa, "k0/kL wavelength ratio");
    sites_cmd->add_option("--n-atoms", st_atoms, "mean atom count <N> (sets the radius)");
    sites_cmd->add_option("--filling", st_filling, "occupation probability P (sets the radius)");
    sites_cmd->add_option("--out", st_out, "output CSV path (default stdout)");

    for (auto* sub : app.get_subcommands(nullptr)) {
        sub->set_config("--config", "", "read options from a TOML/INI file (command line wins)");
    }

    app.parse(argc, argv);

    if (*sweep) {
        if (!(sw.theta_min_pi > 0.0) || !(sw.theta_max_pi < 0.5) ||
            !(sw.theta_min_pi <= sw.theta_max_pi)) {
            throw std::domain_error("sweep range must lie inside (0, 0.5) pi");
        }
        std::vector<SweepRow> rows(sw.points);
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= sw.points) return;
                const double theta_pi =
                    sw.points == 1 ? sw.theta_min_pi
                                   : sw.theta_min_pi + (sw.theta_max_pi - sw.theta_min_pi) * i /
                                                           (sw.points - 1.0);
                rows[i] = sweep_point(theta_pi * pi, sw, sw.seed + i);
            }
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min<int>(sw.threads, sw.points);
        for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        if (sw.out.empty()) {
            write_sweep_rows(std::cout, rows);
        } else {
            auto os = open_output(sw.out);
            write_sweep_rows(os, rows);
        }
        return kExitOk;
    }

    if (*shift) {
        const double theta = sh_theta_pi * pi;
        const auto geom = build_six_beam_lattice(theta, sh.kappa);
        const auto profile = make_sphere_profile(geom, sh.mean_atoms, sh.filling);
        if (sh_method == "auto") {
            sh_method = (sh.filling == 1.0 && sh.gamma_t == 0.0) ? "restructured" : "brute";
        }
        ShiftResult result;
        if (sh_method == "restructured") {
            if (sh.gamma_t != 0.0) {
                throw std::domain_error(
                    "the restructured path evaluates the zeroth-order term only; "
                    "use --method brute for Gamma*t > 0");
            }
            result = shift_restructured_perfect(geom, profile, sh.pulse_error);
        } else {
            const auto sites = enumerate_sites(geom, profile);
            const AtomSample sample = sh.filling < 1.0
                                          ? sample_occupancy(sites, sh.filling, sh.seed)
                                          : full_sample(sites);
            result = shift_brute(sample, {sh.pulse_error, sh.gamma_t, 0.0, 0.0}, sh.max_brute);
        }
        std::printf("method=%s\n", sh_method.c_str());
        std::printf("n_atoms=%zu\n", result.n_atoms);
        if (result.seed) std::printf("seed=%llu\n", static_cast<unsigned long long>(*result.seed));
        std::printf("shift0_over_gamma=%.12g\n", result.zeroth);
        std::printf("shift1_over_gamma=%.12g\n", result.first);
        std::printf("total_over_gamma=%.12g\n", result.total);
        if (result.outside_perturbative_validity) {
            std::printf("warning=outside perturbative validity (Gamma*t or shift*t too large)\n");
        }
        if (!sh.out.empty()) {
            SweepConfig one = sh;
            one.first_order = sh.gamma_t > 0.0;
            std::vector<SweepRow> rows{sweep_point(theta, one, one.seed)};
            auto os = open_output(sh.out);
            write_sweep_rows(os, rows);
        }
        return kExitOk;
    }

    if (*variance) {
        const auto geom = build_six_beam_lattice(var_theta_pi * pi, va.kappa);
        const auto profile = make_sphere_profile(geom, va.mean_atoms, va.filling);
        if (var_mode != "full" && va.filling > kDiffuseFillingSoftLimit) {
            std::cerr << "warning: diffuse variance assumes P << 1 (P = " << va.filling
                      << " exceeds " << kDiffuseFillingSoftLimit << ")\n";
        }
        if (var_mode == "full" || var_mode == "both") {
            const double v = variance_full(geom, profile, va.pulse_error, var_max_sites);
            std::printf("variance_full=%.12g\nstddev_full=%.12g\n", v, std::sqrt(v));
        }
        if (var_mode == "diffuse" || var_mode == "both") {
            const double v = variance_diffuse(geom, profile, va.pulse_error);
            std::printf("variance_diffuse=%.12g\nstddev_diffuse=%.12g\n", v, std::sqrt(v));
        }
        return kExitOk;
    }

    if (*resonances) {
        const auto sols =
            find_resonant_angles(rs_kappa, rs_min_pi * pi, rs_max_pi * pi, rs_max_index);
        std::ostringstream os;
        os << "n_x,n_y,n_z,theta0_over_pi,residual\n";
        char buf[160];
        for (const auto& s : sols) {
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%.10f,%.3e\n", s.index[0], s.index[1],
                          s.index[2], s.theta0 / pi, s.residual);
            os << buf;
        }
        if (rs_out.empty()) {
            std::cout << os.str();
        } else {
            open_output(rs_out) << os.str();
        }
        return kExitOk;
    }

    if (*zero) {
        auto shift_of_theta = [&](double th) {
            const auto g = build_six_beam_lattice(th, z_kappa);
            const auto p = make_sphere_profile(g, z_atoms, z_filling);
            return z_filling == 1.0 ? shift_restructured_perfect(g, p, 1.0).zeroth
                                    : mean_shift_imperfect(g, p, 1.0);
        };
        const auto z = find_zero_shift(shift_of_theta, z_min_pi * pi, z_max_pi * pi);
        if (!z) {
            std::printf("found=0\nmessage=no sign change in bracket; widen it\n");
            return kExitOk;
        }
        std::printf("found=1\ntheta_good_over_pi=%.8f\nresidual_shift_scaled=%.6e\n",
                    z->theta / pi, 2.0 * z->shift);
        return kExitOk;
    }

    if (*oracle) {
        AtomSample sample;
        if (!or_positions.empty()) {
            sample = read_positions_csv(or_positions);
        } else if (!or_sep.empty()) {
            sample.positions = {{0, 0, 0}, parse_vec3(or_sep)};
        } else {
            sample = lattice_sites_sample(or_n, or_seed);
        }
        const RamseyParams params{or_eps, or_gt, or_gamma, 0.0};
        if (!(or_gt > 0.0)) throw std::domain_error("oracle needs --gt > 0");
        if (or_points < 5) throw std::domain_error("oracle needs at least 5 grid points");
        const double span = or_span > 0.0 ? or_span : 0.45 * pi / or_gt;
        std::vector<double> grid(or_points);
        for (int i = 0; i < or_points; ++i) {
            grid[i] = -span + 2.0 * span * i / (or_points - 1.0);
        }
        const auto signals = ramsey_experiment(sample, params, grid, or_nmax);
        const auto peak = oracle_peak_shift(sample, params, or_nmax);
        const double eq18 = shift_brute(sample, params).total;
        const double rel = std::abs(peak.delta_p - eq18) / std::max(std::abs(eq18), 1e-300);

        std::ostringstream os;
        os << "delta_over_gamma,signal\n";
        char buf[96];
        for (int i = 0; i < or_points; ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", grid[i], signals.s_tilde.signal[i]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "# delta_p_over_gamma=%.12g\n", peak.delta_p);
        os << buf;
        if (or_out.empty()) {
            std::cout << os.str();
        } else {
            open_output(or_out) << os.str();
        }
        std::printf("# eq18=%.12g oracle=%.12g rel_err=%.3e\n", eq18, peak.delta_p, rel);
        return kExitOk;
    }

    if (*kernels) {
        const Vec3 v = parse_vec3(kr_v);
        std::printf("f=%.15g\ng=%.15g\nU=%.15g\nD=%.15g\n", f_kernel(v), g_kernel(v),
                    pair_energy(v), quadrature_coupling(v));
        return kExitOk;
    }

    if (*sites_cmd) {
        const auto geom = build_six_beam_lattice(st_theta_pi * pi, st_kappa);
        const auto profile = make_sphere_profile(geom, st_atoms, st_filling);
        const auto sites = enumerate_sites(geom, profile);
        if (st_out.empty()) {
            write_sites_csv(std::cout, sites);
        } else {
            auto os = open_output(st_out);
            write_sites_csv(os, sites);
        }
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace
