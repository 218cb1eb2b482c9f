// Acceptance run: one PASS/FAIL line per criterion, plus indented detail lines.
// Exit status is the number of failed criteria (capped at 1 for ctest).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fblab/axisym.hpp"
#include "fblab/constraint_maps.hpp"
#include "fblab/diagnostics.hpp"
#include "fblab/geodesics.hpp"
#include "fblab/operators.hpp"
#include "fblab/scalar_obstacle.hpp"
#include "fblab/specialfunc.hpp"

using namespace fblab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
int failures = 0;

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void verdict(int id, bool pass, const std::string& what) {
    std::printf("%s  %2d  %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <class... A>
void detail(const char* fmt, A... args) {
    std::printf("          ");
    std::printf(fmt, args...);
    std::printf("\n");
}

double norm3(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

// 1 ------------------------------------------------------------------------

void scalar_1d() {
    const Clock clock;
    const double h = 1.0 / 512.0;
    const auto g = build_grid(ShapeSpec::box(1, {-1, 0, 0}, {1, 0, 0}), h);
    const auto psi = sample_scalar(g, [](const Point& x) { return 0.5 - x[0] * x[0]; });
    PsorConfig cfg;
    cfg.omega = 1.99;
    cfg.tol = 1e-8;
    const ScalarObstacleProblem p(psi, ScalarField(g, 0.0));
    const auto r = solve_psor(p, cfg);
    const auto rep = extract_contact(r.u, p);

    // tangent from (+-1, 0) to 1/2 - x^2 touches at +-(1 - sqrt(1/2))
    const double a = 1.0 - std::sqrt(0.5);
    const double slope = 2 * a;
    double err = 0.0;
    for (std::size_t n = 0; n < g->size(); ++n) {
        const double x = g->position(n)[0];
        const double exact = std::abs(x) <= a ? 0.5 - x * x : slope * (1.0 - std::abs(x));
        err = std::max(err, std::abs(r.u[n] - exact));
    }
    double left = 1.0, right = -1.0;
    for (const auto& f : rep.faces) {
        left = std::min(left, f.midpoint[0]);
        right = std::max(right, f.midpoint[0]);
    }
    const double t = clock.seconds();
    const bool ok = std::abs(left + a) <= 2 * h && std::abs(right - a) <= 2 * h && err <= 5 * h && t < 5.0;
    verdict(1, ok, "scalar 1D obstacle: free boundary within 2h, error <= 5h, < 5 s");
    detail("free boundary [%.6f, %.6f] vs +-%.6f (2h = %.6f)", left, right, a, 2 * h);
    detail("max error %.3e (5h = %.3e), %.2f s", err, 5 * h, t);
}

// 2, 3, 4 ------------------------------------------------------------------

struct RadialRun {
    GridPtr grid;
    ConstraintSolveResult res;
    ConvexBody body = ConvexBody::ball(3, {}, 1.0);
};

RadialRun radial_solution(double& seconds) {
    const Clock clock;
    RadialRun out;
    out.grid = build_grid(ShapeSpec::ball(3, {}, 2.0), 1.0 / 32.0);
    const ConstraintMapProblem p(out.grid, out.body, 3, [](const Point& x, std::span<double> o) {
        for (int a = 0; a < 3; ++a) o[a] = x[a];
    });
    out.res = solve_projected_gradient(p);
    seconds = clock.seconds();
    return out;
}

double radial_root() {
    double r = 0.5;
    for (int i = 0; i < 60; ++i) r -= (r * r * r - 24 * r + 16) / (3 * r * r - 24);
    return r;
}

void radial(const RadialRun& run, double seconds) {
    const double rho = radial_root();
    const auto rep = map_contact_report(run.res.u, run.body);
    double mean = 0.0;
    for (const auto& f : rep.faces) mean += norm3(f.midpoint);
    mean /= std::max<std::size_t>(1, rep.faces.size());
    const auto sing = detect_discontinuities(run.res.u, 1.0);
    const double h = run.grid->spacing();
    const bool one_at_origin = sing.discontinuities.size() == 1 && norm3(sing.discontinuities[0].position) <= 0.5 * h;
    const bool ok = run.res.converged && std::abs(mean - rho) <= 0.05 && one_at_origin && seconds < 600.0;
    verdict(2, ok, "radial ball-in-ball: free-boundary radius within 0.05, one candidate at the origin, < 10 min");
    detail("radius %.6f vs %.6f, %zu faces", mean, rho, rep.faces.size());
    detail("%zu candidate(s)%s, %ld sweeps, %.1f s", sing.discontinuities.size(), one_at_origin ? " at the origin" : "",
           run.res.iterations, seconds);
}

std::vector<double> dyadic(double lo, double hi) {
    std::vector<double> r;
    for (double s = lo; s <= hi * (1 + 1e-12); s *= 2) r.push_back(s);
    return r;
}

void monotonicity(const RadialRun& run) {
    const double h = run.grid->spacing();
    const auto radii = dyadic(4 * h, 0.25);
    const std::vector<Point> points{{0, 0, 0}, {0.5, 0, 0}, {0, 0.3, 0.3}, {-0.75, 0.25, 0}, {0, 0, 1.2}};
    bool mono = true;
    const auto dens = energy_density(run.res.u);
    for (const auto& x0 : points) {
        const auto m = rescaled_energy_from_density(dens, x0, radii, 0.05);
        mono = mono && m.monotone;
        detail("solution x0 = (%g, %g, %g): E = %s", x0[0], x0[1], x0[2], [&] {
            std::string s;
            for (double e : m.energies) s += std::to_string(e) + " ";
            return s;
        }().c_str());
    }

    // exact x/|x| on B_2, same lattice
    const auto hedge = fixture_hedgehog(run.grid);
    const auto hd = energy_density(hedge);
    double worst = 0.0;
    for (const auto& x0 : points) {
        const auto m = rescaled_energy_from_density(hd, x0, radii, 0.05);
        mono = mono && m.monotone;
    }
    const auto at0 = rescaled_energy_from_density(hd, {}, radii, 0.05);
    for (std::size_t i = 0; i < at0.energies.size(); ++i) {
        const double dev = std::abs(at0.energies[i] / (8 * kPi) - 1.0);
        worst = std::max(worst, dev);
        detail("x/|x| at 0, r = %g (%gh): E = %.4f, deviation %.2f%%", at0.radii[i], at0.radii[i] / h, at0.energies[i], 100 * dev);
    }
    const bool ok = mono && worst <= 0.05;
    verdict(3, ok, "monotonicity: nondecreasing within 5% slack; x/|x| constant 8 pi within 5% on [4h, 1/4]");
    detail("monotone everywhere: %s; worst deviation from 8 pi %.2f%%", mono ? "yes" : "no", 100 * worst);
    // the lattice deficit is about 11 h / (8 pi r), so 5% needs r >= 9h
    const std::vector<double> coarse{0.5, 1.0};
    const auto far = rescaled_energy_from_density(hd, {}, coarse, 0.05);
    double far_worst = 0.0;
    for (double e : far.energies) far_worst = std::max(far_worst, std::abs(e / (8 * kPi) - 1.0));
    detail("info: at r = 16h, 32h the deviation is %.2f%% (%s)", 100 * far_worst, far_worst <= 0.05 ? "within 5%" : "over 5%");
}

void distance_vs_direction(const RadialRun& run) {
    const double h = run.grid->spacing();
    const auto d = distance_diagnostics(run.res.u, run.body);
    const double osc = local_oscillation(d.d, {}, 2 * h);
    const double jump = antipodal_jump(run.res.u, {}, 2 * h);
    const bool ok = osc <= 10 * h && std::abs(jump - 2.0) <= 0.1;
    verdict(4, ok, "dist(u, O) oscillation <= 10h across the origin while the direction jumps by 2");
    detail("oscillation %.3e (10h = %.3e), antipodal direction jump %.6f", osc, 10 * h, jump);
}

// 5 ------------------------------------------------------------------------

void flat_vs_convex() {
    const Clock clock;
    FlatPieceConfig slab;
    slab.body = ConvexBody::slab_capped_ball(3, {}, 1.0, 0.5);
    const auto rs = flat_piece_experiment(slab);
    bool slab_ok = rs.near_free_boundary && rs.image_on_flat;
    detail("slab: %zu candidates, min distance %.3gh, on flat piece %s", rs.singularities.discontinuities.size(),
           rs.min_distance_h, rs.image_on_flat ? "yes" : "no");
    if (!slab_ok) {
        FlatPieceConfig fine = slab;
        fine.h = 1.0 / 48.0;
        const auto rf = flat_piece_experiment(fine);
        slab_ok = rf.min_distance_h < rs.min_distance_h;
        detail("slab at h = 1/48: min distance %.3gh", rf.min_distance_h);
    }
    bool convex_ok = true;
    for (const auto& [name, body] : {std::pair{"ball", ConvexBody::ball(3, {}, 1.0)},
                                     std::pair{"ellipsoid", ConvexBody::ellipsoid(3, {}, {1.0, 1.0, 0.5})}}) {
        FlatPieceConfig c;
        c.body = body;
        const auto r = flat_piece_experiment(c);
        convex_ok = convex_ok && r.within_4h == 0;
        detail("%s: %zu candidates, %zu within 4h of the free boundary", name, r.singularities.discontinuities.size(), r.within_4h);
    }
    verdict(5, slab_ok && convex_ok, "flat piece flags a candidate on the free boundary; ball and ellipsoid flag none within 4h");
    detail("%.1f s", clock.seconds());
}

// 6 ------------------------------------------------------------------------

void axisym_cone() {
    const Clock clock;
    const double h = 1.0 / 64.0;
    const AxisymProblem p(h, 2, 1.1);
    const auto res = solve_axisym(p);
    const auto contact = axisym_contact_mask(res.u);
    const auto faces = axisym_free_boundary(res.u, contact);
    const auto axis = axis_branch_check(res.u, 2, 3 * h);
    const std::array<double, 3> zeros{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    std::size_t fb = 0;
    bool branch_ok = true, cone_ok = true;
    for (const auto& a : axis) {
        if (!a.free_boundary) continue;
        ++fb;
        branch_ok = branch_ok && a.max_partial <= 3 * h;
        try {
            const auto c = cone_fit(faces, h, a.z, 2);
            double gap = 1.0;
            for (double z : zeros) gap = std::min(gap, std::abs(c.cos_phi - z));
            cone_ok = cone_ok && (c.axis_hugging || gap <= 0.1);
            detail("vertex z = %+.5f: partials %.2e, cos phi %.4f, gap %.4f%s", a.z, a.max_partial, c.cos_phi, gap,
                   c.axis_hugging ? " (axis-hugging)" : "");
        } catch (const std::exception& e) {
            cone_ok = false;
            detail("vertex z = %+.5f: %s", a.z, e.what());
        }
    }
    const double t = clock.seconds();
    const bool ok = res.converged && fb > 0 && branch_ok && cone_ok && t < 600.0;
    verdict(6, ok, "axisymmetric k = 2: axis free-boundary nodes are branch points, cone angle at a zero of P_3");
    detail("%zu axis free-boundary node(s), %.1f s", fb, t);
}

// 7 ------------------------------------------------------------------------

double legendre_ref(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return p0;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

void legendre() {
    const Clock clock;
    double worst = 0.0;
    bool sym = true, inter = true;
    std::vector<double> prev;
    for (int n = 1; n <= 50; ++n) {
        const auto z = legendre_zeros(n).zeros;
        if (static_cast<int>(z.size()) != n) sym = false;
        for (std::size_t i = 0; i < z.size(); ++i) {
            worst = std::max(worst, std::abs(legendre_ref(n, z[i])));
            if (z[i] != -z[z.size() - 1 - i]) sym = false;
        }
        // zeros of P_{n-1} separate those of P_n
        for (std::size_t i = 0; i < prev.size(); ++i) inter = inter && z[i] < prev[i] && prev[i] < z[i + 1];
        prev = z;
    }
    const auto z3 = legendre_zeros(3).zeros, z5 = legendre_zeros(5).zeros;
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0, b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const std::array<double, 3> c3{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const std::array<double, 5> c5{-b, -a, 0.0, a, b};
    double closed = 0.0;
    for (int i = 0; i < 3; ++i) closed = std::max(closed, std::abs(z3[i] - c3[i]));
    for (int i = 0; i < 5; ++i) closed = std::max(closed, std::abs(z5[i] - c5[i]));
    const double t = clock.seconds();
    verdict(7, worst <= 1e-12 && sym && inter && closed <= 1e-6 && t < 1.0,
            "Legendre zeros n <= 50: residual <= 1e-12, symmetric, interlacing, closed forms for n = 3, 5");
    detail("max |P_n(z)| %.2e, closed-form error %.2e, %.3f s", worst, closed, t);
}

// 8 ------------------------------------------------------------------------

double disk_oracle(const Vec& a, const Vec& b) {
    const double ra = std::hypot(a[0], a[1]), rb = std::hypot(b[0], b[1]);
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double s = std::clamp(-(a[0] * dx + a[1] * dy) / (dx * dx + dy * dy), 0.0, 1.0);
    if (std::hypot(a[0] + s * dx, a[1] + s * dy) >= 1.0) return std::hypot(dx, dy);
    const double ang = std::acos(std::clamp((a[0] * b[0] + a[1] * b[1]) / (ra * rb), -1.0, 1.0));
    return std::sqrt(ra * ra - 1) + std::sqrt(rb * rb - 1) + ang - std::acos(1 / ra) - std::acos(1 / rb);
}

void geodesics() {
    const Clock clock;
    const auto body = ConvexBody::ball(2, {}, 1.0);
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> rad(1.2, 3.5), ang(0.0, 2 * kPi);
    int done = 0, agree = 0;
    double worst = 0.0;
    while (done < 20) {
        const double ra = rad(rng), rb = rad(rng), ta = ang(rng), tb = ang(rng);
        const Vec a{ra * std::cos(ta), ra * std::sin(ta), 0}, b{rb * std::cos(tb), rb * std::sin(tb), 0};
        const double L = disk_oracle(a, b);
        if (L <= std::hypot(b[0] - a[0], b[1] - a[1]) + 1e-12) continue;  // not obstructed
        ++done;
        const double d = shortest_path_discrete(GeodesicProblem(a, b, body), 64).length;
        const double rel = std::abs(d - L) / L;
        worst = std::max(worst, rel);
        agree += rel <= 0.01 ? 1 : 0;
    }
    GeodesicConfig lc;
    lc.init = GeodesicInit::Long;
    const double long_len = shortest_path_discrete(GeodesicProblem({-2, 0, 0}, {2, 0, 0}, body), 64, lc).length;
    const double target = 2 * std::sqrt(3.0) + 5 * kPi / 3;
    const bool long_ok = std::abs(long_len - target) <= 0.01 * target;
    const double t = clock.seconds();
    verdict(8, agree == 20 && long_ok && t < 10.0, "geodesics: 20 random obstructed instances within 1%; long side 2 sqrt 3 + 5 pi / 3");
    detail("%d/20 within 1%% (worst %.3f%%)", agree, 100 * worst);
    detail("long init (-2,0)->(2,0): %.6f vs %.6f; %.2f s", long_len, target, t);
    // symmetric endpoints make both wraps equal; check the long side where it differs
    const Vec a{-2.5, 0.7, 0}, b{2.0, 0.9, 0};
    const Ball disk{{0, 0, 0}, 1.0};
    const double lw = std::max(wrap_path_length(a, b, disk, true), wrap_path_length(a, b, disk, false));
    const double ll = shortest_path_discrete(GeodesicProblem(a, b, body), 64, lc).length;
    detail("info: long init (-2.5,0.7)->(2,0.9): %.6f vs longer wrap %.6f (%s)", ll, lw,
           std::abs(ll - lw) <= 0.01 * lw ? "within 1%" : "off by more than 1%");
}

// 9 ------------------------------------------------------------------------

void harmonicity() {
    const Clock clock;
    const double h = 1.0 / 64.0;
    const auto g = build_grid(ShapeSpec::box(2, {-0.5, -0.5, 0}, {0.5, 0.5, 0}), h);
    const std::size_t origin = g->nearest_node({0, 0, 0});
    bool ok = true;
    for (int k = 2; k <= 6; ++k) {
        const auto u = fixture_uk(k, g);
        double lap = 0.0;
        for (int c = 0; c < 3; ++c) {
            const auto l = laplacian_apply(u, c);
            for (std::size_t n : g->interior_nodes()) lap = std::max(lap, std::abs(l[n]));
        }
        const auto b = detect_branch_points(u, h / 2);
        const bool only = b.size() == 1 && b[0] == origin;
        ok = ok && lap <= 10 * h * h && only;
        detail("k = %d: max |Lap_h| = %.3f h^2, %zu branch point(s)%s", k, lap / (h * h), b.size(), only ? " (origin)" : "");
    }
    const double t = clock.seconds();
    verdict(9, ok && t < 5.0, "fixtures u_2..u_6: max |Lap_h| <= 10 h^2 on the unit square, branch point only at the origin");
    detail("%.2f s", t);
}

// 10 -----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(const fs::path& work) {
    const Clock clock;
    const std::string cli = FBLAB_CLI_PATH;
    const std::string config = std::string(FBLAB_SOURCE_DIR) + "/configs/suite.json";
    std::vector<fs::path> outs;
    for (const char* threads : {"1", "4"}) {
        const fs::path out = work / (std::string("threads-") + threads);
        fs::remove_all(out);
        const std::string cmd = "FB_LAB_THREADS=" + std::string(threads) + " " + cli + " run " + config + " --out " +
                                out.string() + " --check -q > " + (work / "cli.log").string() + " 2>&1";
        const int rc = std::system(cmd.c_str());
        detail("FB_LAB_THREADS=%s: exit status %d", threads, WEXITSTATUS(rc));
        outs.push_back(out);
    }
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(outs[0])) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        ++files;
        const fs::path other = outs[1] / fs::relative(e.path(), outs[0]);
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
            ++differ;
            detail("differs: %s", fs::relative(e.path(), outs[0]).c_str());
        }
    }
    std::size_t files4 = 0;
    for (const auto& e : fs::recursive_directory_iterator(outs[1]))
        if (e.is_regular_file() && e.path().extension() == ".csv") ++files4;
    verdict(10, files > 0 && differ == 0 && files == files4, "full suite: byte-identical CSVs with FB_LAB_THREADS = 1 and 4");
    detail("%zu CSV files compared, %zu differ, %.1f s", files, differ, clock.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance-out";
    fs::create_directories(work);

    scalar_1d();
    double radial_seconds = 0.0;
    const RadialRun run = radial_solution(radial_seconds);
    radial(run, radial_seconds);
    monotonicity(run);
    distance_vs_direction(run);
    flat_vs_convex();
    axisym_cone();
    legendre();
    geodesics();
    harmonicity();
    determinism(work);

    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
