#include "fblab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

#include <Eigen/Core>

#include "fblab/axisym.hpp"
#include "fblab/constraint_maps.hpp"
#include "fblab/diagnostics.hpp"
#include "fblab/error.hpp"
#include "fblab/geodesics.hpp"
#include "fblab/operators.hpp"
#include "fblab/parallel.hpp"
#include "fblab/scalar_obstacle.hpp"

#ifndef FBLAB_VERSION
#define FBLAB_VERSION "0.0.0"
#endif

namespace fblab {

using json = nlohmann::json;
namespace fs = std::filesystem;

const char* version() { return FBLAB_VERSION; }

bool ExperimentReport::checks_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

// ---------------------------------------------------------------------------
// Config access with field paths.

class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    bool is_boolean(const std::string& key) const { return has(key) && j_.at(key).is_boolean(); }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const { throw ConfigError(child(key), what); }

    Node object(const std::string& key) const {
        if (!has(key)) fail(key, "missing");
        if (!j_.at(key).is_object()) fail(key, "must be an object");
        return {j_.at(key), child(key)};
    }

    std::optional<Node> optional_object(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return object(key);
    }

    double number(const std::string& key) const {
        if (!has(key)) fail(key, "missing");
        const json& v = j_.at(key);
        if (!v.is_number()) fail(key, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key) const {
        const double x = number(key);
        if (!(x > 0.0)) fail(key, "must be > 0");
        return x;
    }
    double positive(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

    double in_range(const std::string& key, double fallback, double lo, double hi, bool lo_open, bool hi_open) const {
        if (!has(key)) return fallback;
        const double x = number(key);
        const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
        if (!ok) {
            std::ostringstream os;
            os << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
            fail(key, os.str());
        }
        return x;
    }

    long integer(const std::string& key, long lo, long hi) const {
        if (!has(key)) fail(key, "missing");
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "must be an integer");
        const long x = v.get<long>();
        if (x < lo || x > hi) fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }
    long integer(const std::string& key, long fallback, long lo, long hi) const {
        return has(key) ? integer(key, lo, hi) : fallback;
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) fail(key, "must be true or false");
        return j_.at(key).get<bool>();
    }

    std::string text(const std::string& key) const {
        if (!has(key)) fail(key, "missing");
        if (!j_.at(key).is_string()) fail(key, "must be a string");
        return j_.at(key).get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

    std::string choice(const std::string& key, const std::vector<std::string>& allowed) const {
        const std::string s = text(key);
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : " | ") + a;
            fail(key, "must be one of " + list);
        }
        return s;
    }
    std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) const {
        return has(key) ? choice(key, allowed) : fallback;
    }

    std::vector<double> numbers(const std::string& key) const {
        if (!has(key)) fail(key, "missing");
        const json& v = j_.at(key);
        if (!v.is_array()) fail(key, "must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ConfigError(child(key) + "[" + std::to_string(i) + "]", "must be a finite number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Point point(const std::string& key, int dim) const {
        const auto v = numbers(key);
        if (v.size() != static_cast<std::size_t>(dim)) fail(key, "must have " + std::to_string(dim) + " entries");
        Point p{};
        std::copy(v.begin(), v.end(), p.begin());
        return p;
    }

    std::vector<Point> points(const std::string& key, int dim) const {
        if (!has(key)) fail(key, "missing");
        const json& v = j_.at(key);
        if (!v.is_array()) fail(key, "must be an array of points");
        std::vector<Point> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = child(key) + "[" + std::to_string(i) + "]";
            if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(dim)) {
                throw ConfigError(p, "must have " + std::to_string(dim) + " entries");
            }
            Point x{};
            for (int a = 0; a < dim; ++a) {
                if (!v[i][static_cast<std::size_t>(a)].is_number()) throw ConfigError(p, "must hold numbers");
                x[static_cast<std::size_t>(a)] = v[i][static_cast<std::size_t>(a)].get<double>();
            }
            out.push_back(x);
        }
        return out;
    }

private:
    const json& j_;
    std::string path_;
};

ShapeSpec parse_domain(const Node& n) {
    const std::string shape = n.choice("shape", "box", {"box", "ball", "annulus"});
    if (shape == "box") {
        const auto lo = n.numbers("lo");
        const auto hi = n.numbers("hi");
        if (lo.empty() || lo.size() > 3) n.fail("lo", "must have 1 to 3 entries");
        if (hi.size() != lo.size()) n.fail("hi", "must have as many entries as lo");
        Point plo{}, phi{};
        for (std::size_t a = 0; a < lo.size(); ++a) {
            if (!(hi[a] > lo[a])) n.fail("hi", "must exceed lo in every coordinate");
            plo[a] = lo[a];
            phi[a] = hi[a];
        }
        return ShapeSpec::box(static_cast<int>(lo.size()), plo, phi);
    }
    const int dim = static_cast<int>(n.integer("dim", 1, 3));
    const Point center = n.has("center") ? n.point("center", dim) : Point{};
    if (shape == "ball") return ShapeSpec::ball(dim, center, n.positive("radius"));
    const double inner = n.positive("inner");
    const double outer = n.positive("outer");
    if (!(outer > inner)) n.fail("outer", "must exceed inner");
    return ShapeSpec::annulus(dim, center, inner, outer);
}

ConvexBody parse_body(const Node& n, int m) {
    const std::string type = n.choice("type", {"ball", "ellipsoid", "slab", "half_space"});
    const Vec center = n.has("center") ? n.point("center", m) : Vec{};
    try {
        if (type == "ball") return ConvexBody::ball(m, center, n.positive("radius"));
        if (type == "ellipsoid") {
            Vec axes{1.0, 1.0, 1.0};
            const Vec given = n.point("semi_axes", m);
            for (int a = 0; a < m; ++a) {
                if (!(given[static_cast<std::size_t>(a)] > 0.0)) n.fail("semi_axes", "entries must be > 0");
                axes[static_cast<std::size_t>(a)] = given[static_cast<std::size_t>(a)];
            }
            return ConvexBody::ellipsoid(m, center, axes);
        }
        if (type == "slab") return ConvexBody::slab_capped_ball(m, center, n.positive("radius"), n.positive("half_width"));
        const Vec point = n.has("point") ? n.point("point", m) : Vec{};
        return ConvexBody::half_space(m, point, n.point("normal", m));
    } catch (const DomainError& e) {
        throw ConfigError(n.path(), e.what());
    }
}

PsorConfig parse_psor(const Node& e) {
    PsorConfig cfg;
    if (const auto s = e.optional_object("solver")) {
        cfg.omega = s->in_range("omega", cfg.omega, 0.0, 2.0, true, true);
        cfg.tol = s->positive("tol", cfg.tol);
        cfg.max_iters = s->integer("max_iters", cfg.max_iters, 1, 1'000'000'000);
    }
    return cfg;
}

ConstraintSolverConfig parse_map_solver(const Node& e) {
    ConstraintSolverConfig cfg;
    if (const auto s = e.optional_object("solver")) {
        const std::string scheme = s->choice("scheme", "sor", {"sor", "projected_gradient"});
        cfg.scheme = scheme == "sor" ? MapScheme::RedBlackSor : MapScheme::ProjectedGradient;
        cfg.omega = s->in_range("omega", cfg.omega, 0.0, 2.0, true, true);
        cfg.tau0 = s->positive("tau0", cfg.tau0);
        cfg.tol = s->positive("tol", cfg.tol);
        cfg.update_tol = s->positive("update_tol", cfg.update_tol);
        cfg.max_iters = s->integer("max_iters", cfg.max_iters, 1, 1'000'000'000);
    }
    cfg.throw_on_failure = false;
    return cfg;
}

AxisymSolverConfig parse_axisym_solver(const Node& e) {
    AxisymSolverConfig cfg;
    if (const auto s = e.optional_object("solver")) {
        cfg.theta = s->in_range("theta", cfg.theta, 0.0, 1.0, true, false);
        cfg.tol = s->positive("tol", cfg.tol);
        cfg.update_tol = s->positive("update_tol", cfg.update_tol);
        cfg.max_iters = s->integer("max_iters", cfg.max_iters, 1, 1'000'000'000);
    }
    cfg.throw_on_failure = false;
    return cfg;
}

DensityThresholds parse_thresholds(const Node& e) {
    DensityThresholds t;
    if (const auto s = e.optional_object("thresholds")) {
        t.regular_lo = s->in_range("regular_lo", t.regular_lo, 0.0, 1.0, false, false);
        t.regular_hi = s->in_range("regular_hi", t.regular_hi, 0.0, 1.0, false, false);
        t.singular_max = s->in_range("singular_max", t.singular_max, 0.0, 1.0, false, false);
        t.max_radius_h = s->in_range("max_radius_h", t.max_radius_h, 4.0, 1e6, false, false);
        if (t.regular_lo > t.regular_hi) s->fail("regular_hi", "must be >= regular_lo");
        if (t.singular_max >= t.regular_lo) s->fail("singular_max", "must be below regular_lo");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Experiment specs.

struct ScalarSpec {
    double h = 0.0;
    bool two_lobe = false;
    ShapeSpec domain;
    Point center{};
    double peak = 0.5;
    double curvature = 1.0;
    double boundary_value = 0.0;
    double a = 0.4, c = 4.0, b = 4.0;
    std::vector<double> perturbations;
    PsorConfig psor;
    DensityThresholds thresholds;
    double contact_tol = -1.0;
};

enum class MapKind { Identity, Hedgehog, Constant, Uk };

struct MapSpec {
    double h = 0.0;
    ShapeSpec domain;
    ConvexBody body = ConvexBody::ball(3, {}, 1.0);
    int m = 3;
    MapKind map = MapKind::Identity;
    Vec value{};
    Point map_center{};
    int k = 2;
    ConstraintSolverConfig solver;
    double eps = 1.0;
    double flat_tol = 1e-3;
    double contact_tol = 1e-9;
    double branch_tol = 0.0;
    std::vector<Point> points;
    double slack = 0.05;
    double r_max = 0.25;
    bool radial = false;
};

struct FlatSpec {
    FlatPieceConfig cfg;
    bool expect_flat = true;
    double refine_h = 0.0;
};

struct AxisymSpec {
    double h = 0.0;
    int k = 2;
    double scale = 1.0;
    AxisymSolverConfig solver;
    double branch_tol = -1.0;
    double contact_tol = 1e-9;
    double r_lo_h = 4.0;
    double r_hi_h = 16.0;
    double cone_tol = 0.1;
    double lift_h = 0.0;
};

struct GeodesicSpec {
    Vec a{};
    Vec b{};
    ConvexBody body = ConvexBody::ball(2, {}, 1.0);
    int n_points = 64;
    GeodesicConfig cfg;
    double dtheta = 1e-2;
    double rel_tol = 0.01;
};

struct FixtureSpec {
    double h = 1.0 / 64.0;
    std::vector<int> ks{2, 3, 4, 5, 6};
    double branch_tol = -1.0;
    double harmonic_c = 10.0;
    bool hedgehog = true;
    double hedgehog_h = 1.0 / 32.0;
    double hedgehog_radius = 2.0;
    std::vector<double> radii{0.125, 0.25, 0.5, 1.0};
    std::vector<Point> points{{0.0, 0.0, 0.0}};
    double slack = 0.05;
    double energy_tol = 0.05;
};

using Spec = std::variant<ScalarSpec, MapSpec, FlatSpec, AxisymSpec, GeodesicSpec, FixtureSpec>;

struct Parsed {
    std::string name;
    std::string kind;
    Spec spec;
};

ScalarSpec parse_scalar(const Node& e) {
    ScalarSpec s;
    s.h = e.positive("h");
    const Node ob = e.object("obstacle");
    const std::string type = ob.choice("type", {"parabola", "two_lobe"});
    if (type == "parabola") {
        s.domain = parse_domain(e.object("domain"));
        s.center = ob.has("center") ? ob.point("center", s.domain.dim) : Point{};
        s.peak = ob.number("peak");
        s.curvature = ob.positive("curvature");
        s.boundary_value = e.number("boundary_value", 0.0);
    } else {
        s.two_lobe = true;
        s.a = ob.in_range("a", s.a, 0.0, 1.0, true, true);
        s.c = ob.positive("c", s.c);
        s.b = ob.positive("b", s.b);
    }
    if (e.has("perturbations")) s.perturbations = e.numbers("perturbations");
    s.psor = parse_psor(e);
    s.thresholds = parse_thresholds(e);
    s.contact_tol = e.positive("contact_tol", s.contact_tol);
    return s;
}

MapSpec parse_map(const Node& e) {
    MapSpec s;
    s.h = e.positive("h");
    s.domain = parse_domain(e.object("domain"));
    const Node bm = e.object("boundary_map");
    const std::string type = bm.choice("type", {"identity", "hedgehog", "constant", "uk"});
    if (type == "identity") {
        s.map = MapKind::Identity;
        s.m = s.domain.dim;
    } else if (type == "hedgehog") {
        s.map = MapKind::Hedgehog;
        s.m = s.domain.dim;
        s.map_center = bm.has("center") ? bm.point("center", s.domain.dim) : Point{};
    } else if (type == "constant") {
        s.map = MapKind::Constant;
        const auto v = bm.numbers("value");
        if (v.empty() || v.size() > 3) bm.fail("value", "must have 1 to 3 entries");
        s.m = static_cast<int>(v.size());
        std::copy(v.begin(), v.end(), s.value.begin());
    } else {
        s.map = MapKind::Uk;
        if (s.domain.dim != 2) bm.fail("type", "uk needs a 2D domain");
        s.m = 3;
        s.k = static_cast<int>(bm.integer("k", 1, 12));
    }
    s.body = parse_body(e.object("body"), s.m);
    s.solver = parse_map_solver(e);
    s.eps = e.positive("eps", s.eps);
    s.flat_tol = e.positive("flat_tol", s.flat_tol);
    s.contact_tol = e.positive("contact_tol", s.contact_tol);
    s.branch_tol = e.has("branch_tol") ? e.positive("branch_tol") : 0.0;
    if (const auto mono = e.optional_object("monotonicity")) {
        s.points = mono->points("points", s.domain.dim);
        s.slack = mono->in_range("slack", s.slack, 0.0, 1.0, false, true);
        s.r_max = mono->positive("r_max", s.r_max);
        if (s.r_max < 4.0 * s.h) mono->fail("r_max", "must be at least 4h");
    }
    s.radial = e.flag("radial_oracle", false);
    if (s.radial) {
        const auto* ball = std::get_if<BallShape>(&s.domain.shape);
        const auto* body = std::get_if<Ball>(&s.body.shape());
        const bool centred_domain = ball && s.domain.dim == 3 && ball->center == Point{} && ball->radius > 1.0;
        const bool unit_body = body && body->center == Vec{} && body->radius == 1.0;
        if (!centred_domain || !unit_body || s.map != MapKind::Identity) {
            e.fail("radial_oracle", "needs a centred 3D ball domain of radius > 1, a unit ball body and the identity map");
        }
    }
    return s;
}

FlatSpec parse_flat(const Node& e) {
    FlatSpec s;
    s.cfg.h = e.positive("h");
    s.cfg.domain_radius = e.positive("domain_radius", s.cfg.domain_radius);
    s.cfg.body = parse_body(e.object("body"), 3);
    s.cfg.solver = parse_map_solver(e);
    s.cfg.eps = e.positive("eps", s.cfg.eps);
    s.cfg.flat_tol = e.positive("flat_tol", s.cfg.flat_tol);
    s.cfg.contact_tol = e.positive("contact_tol", s.cfg.contact_tol);
    const bool slab = std::holds_alternative<SlabCappedBall>(s.cfg.body.shape());
    s.expect_flat = e.choice("expect", slab ? "flat" : "none", {"flat", "none"}) == "flat";
    s.refine_h = e.has("refine_h") ? e.positive("refine_h") : 0.0;
    if (s.refine_h > 0.0 && !(s.refine_h < s.cfg.h)) e.fail("refine_h", "must be finer than h");
    return s;
}

AxisymSpec parse_axisym(const Node& e) {
    AxisymSpec s;
    s.h = e.positive("h");
    s.k = static_cast<int>(e.integer("k", 1, 50));
    s.scale = e.positive("boundary_scale", s.scale);
    s.solver = parse_axisym_solver(e);
    s.branch_tol = e.positive("branch_tol", 3.0 * s.h);
    s.contact_tol = e.positive("contact_tol", s.contact_tol);
    if (const auto cone = e.optional_object("cone")) {
        s.r_lo_h = cone->positive("r_lo_h", s.r_lo_h);
        s.r_hi_h = cone->positive("r_hi_h", s.r_hi_h);
        if (!(s.r_hi_h > s.r_lo_h)) cone->fail("r_hi_h", "must exceed r_lo_h");
        s.cone_tol = cone->positive("tol", s.cone_tol);
    }
    s.lift_h = e.has("lift_h") ? e.positive("lift_h") : 0.0;
    return s;
}

GeodesicSpec parse_geodesic(const Node& e) {
    GeodesicSpec s;
    s.a = e.point("a", 2);
    s.b = e.point("b", 2);
    s.body = parse_body(e.object("body"), 2);
    if (s.body.signed_distance(s.a) < 0.0) e.fail("a", "lies inside the body");
    if (s.body.signed_distance(s.b) < 0.0) e.fail("b", "lies inside the body");
    s.n_points = static_cast<int>(e.integer("n_points", s.n_points, 8, 1'000'000));
    const std::string init = e.choice("init", "short", {"short", "long", "straight"});
    s.cfg.init = init == "short" ? GeodesicInit::Short : init == "long" ? GeodesicInit::Long : GeodesicInit::Straight;
    if (const auto sv = e.optional_object("solver")) {
        s.cfg.relax = sv->in_range("relax", s.cfg.relax, 0.0, 1.0, true, false);
        s.cfg.tol = sv->positive("tol", s.cfg.tol);
        s.cfg.length_tol = sv->positive("length_tol", s.cfg.length_tol);
        s.cfg.max_iters = sv->integer("max_iters", s.cfg.max_iters, 1, 1'000'000'000);
    }
    s.dtheta = e.positive("dtheta", s.dtheta);
    s.rel_tol = e.positive("rel_tol", s.rel_tol);
    return s;
}

FixtureSpec parse_fixtures(const Node& e) {
    FixtureSpec s;
    s.h = e.positive("h", s.h);
    if (e.has("ks")) {
        s.ks.clear();
        for (double k : e.numbers("ks")) {
            if (k < 1.0 || k > 12.0 || k != std::floor(k)) e.fail("ks", "entries must be integers in [1, 12]");
            s.ks.push_back(static_cast<int>(k));
        }
    }
    s.branch_tol = e.positive("branch_tol", s.branch_tol);
    s.harmonic_c = e.positive("harmonic_c", s.harmonic_c);
    if (e.is_boolean("hedgehog")) {
        s.hedgehog = e.flag("hedgehog", true);
    } else if (const auto hh = e.optional_object("hedgehog")) {
        s.hedgehog_h = hh->positive("h", s.hedgehog_h);
        s.hedgehog_radius = hh->positive("domain_radius", s.hedgehog_radius);
        if (hh->has("radii")) s.radii = hh->numbers("radii");
        if (s.radii.empty()) hh->fail("radii", "must not be empty");
        for (std::size_t i = 0; i < s.radii.size(); ++i) {
            if (!(s.radii[i] >= 2.0 * s.hedgehog_h) || (i && !(s.radii[i] > s.radii[i - 1]))) {
                hh->fail("radii", "must be increasing and at least 2h");
            }
        }
        if (hh->has("points")) s.points = hh->points("points", 3);
        s.slack = hh->in_range("slack", s.slack, 0.0, 1.0, false, true);
        s.energy_tol = hh->positive("energy_tol", s.energy_tol);
    }
    return s;
}

Parsed parse_experiment(const json& j) {
    if (!j.is_object()) throw ConfigError("", "experiment must be a JSON object");
    const Node e(j, "");
    Parsed p;
    p.kind = e.choice("kind", {"scalar_obstacle", "constraint_map", "flat_piece", "axisym", "geodesic", "fixtures"});
    p.name = e.text("name", p.kind);
    if (p.name.empty() || p.name.front() == '.' ||
        !std::all_of(p.name.begin(), p.name.end(), [](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
        })) {
        e.fail("name", "must be a non-empty file name of letters, digits, '_', '-' or '.'");
    }
    if (p.kind == "scalar_obstacle") p.spec = parse_scalar(e);
    else if (p.kind == "constraint_map") p.spec = parse_map(e);
    else if (p.kind == "flat_piece") p.spec = parse_flat(e);
    else if (p.kind == "axisym") p.spec = parse_axisym(e);
    else if (p.kind == "geodesic") p.spec = parse_geodesic(e);
    else p.spec = parse_fixtures(e);
    return p;
}

// ---------------------------------------------------------------------------
// Output bookkeeping.

/// Raised after diagnostics are written for a run whose solver did not converge.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, double last, long iterations)
        : Error(what), last_(last), iterations_(iterations) {}
    double last() const noexcept { return last_; }
    long iterations() const noexcept { return iterations_; }

private:
    double last_;
    long iterations_;
};

class Run {
public:
    Run(ExperimentReport& report, fs::path root, bool check)
        : report_(report), root_(std::move(root)), dir_(root_ / report.name), check_(check) {
        fs::create_directories(dir_);
    }

    bool checking() const noexcept { return check_; }
    json& summary() { return report_.summary; }

    fs::path file(const std::string& name) const { return dir_ / name; }

    void record(const fs::path& p) { report_.files.push_back(fs::relative(p, root_).generic_string()); }

    void record(const std::vector<PgmImage>& images) {
        for (const auto& img : images) record(img);
    }
    void record(const PgmImage& img) {
        record(img.path);
        PgmImage rel = img;
        rel.path = report_.files.back();
        report_.images.push_back(rel);
    }

    void write_json(const std::string& name, const json& j, int indent = 2) {
        const fs::path p = file(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot open " + p.string() + " for writing");
        out << j.dump(indent) << '\n';
        out.flush();
        if (!out) throw IoError("write to " + p.string() + " failed");
        record(p);
    }

    void add_check(std::string name, bool pass, double value, double target, double tolerance, std::string note = {}) {
        report_.checks.push_back({std::move(name), pass, value, target, tolerance, std::move(note)});
    }

private:
    ExperimentReport& report_;
    fs::path root_;
    fs::path dir_;
    bool check_;
};

std::vector<std::string> node_columns(int dim) {
    std::vector<std::string> h{"node", "x"};
    if (dim > 1) h.emplace_back("y");
    if (dim > 2) h.emplace_back("z");
    h.emplace_back("class");
    return h;
}

std::vector<double> node_row(const Grid& g, std::size_t n) {
    const Point x = g.position(n);
    std::vector<double> row{static_cast<double>(n)};
    for (int a = 0; a < g.dim(); ++a) row.push_back(x[static_cast<std::size_t>(a)]);
    row.push_back(g.node_class(n) == NodeClass::Interior ? 0.0 : 1.0);
    return row;
}

json point_json(const Point& p, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(p[static_cast<std::size_t>(i)]);
    return a;
}

void write_faces(Run& run, const std::string& name, const Grid& g, const std::vector<FreeBoundaryFace>& faces) {
    std::vector<std::string> header{"contact_node", "free_node", "x"};
    if (g.dim() > 1) header.emplace_back("y");
    if (g.dim() > 2) header.emplace_back("z");
    CsvWriter w(run.file(name), header);
    for (const auto& f : faces) {
        std::vector<double> row{static_cast<double>(f.contact_node), static_cast<double>(f.free_node)};
        for (int a = 0; a < g.dim(); ++a) row.push_back(f.midpoint[static_cast<std::size_t>(a)]);
        w.row(row);
    }
    w.close();
    run.record(run.file(name));
}

ScalarField mask_field(const GridPtr& grid, const std::vector<std::uint8_t>& mask) {
    ScalarField f(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) f[n] = mask[n] ? 1.0 : 0.0;
    return f;
}

std::vector<double> dyadic_radii(double h, double r_max) {
    std::vector<double> r;
    for (double x = 4.0 * h; x <= r_max * (1.0 + 1e-12); x *= 2.0) r.push_back(x);
    return r;
}

json singularities_json(const SingularityReport& s, int dim, const std::vector<double>& distance_h = {}) {
    json j;
    j["flagged_nodes"] = s.flagged_nodes;
    j["discontinuities"] = json::array();
    for (std::size_t i = 0; i < s.discontinuities.size(); ++i) {
        const auto& c = s.discontinuities[i];
        json cj{{"node", c.node},
                {"position", point_json(c.position, dim)},
                {"energy", c.energy},
                {"radii", c.radii},
                {"profile", c.profile},
                {"flat_hit", c.flat_hit}};
        if (i < distance_h.size()) cj["free_boundary_distance_h"] = std::isfinite(distance_h[i]) ? json(distance_h[i]) : json(nullptr);
        j["discontinuities"].push_back(cj);
    }
    j["branch_points"] = s.branch_points;
    return j;
}

// ---------------------------------------------------------------------------
// scalar_obstacle

/// Contact interval [left, right] of the 1D problem psi = peak - a (x - c)^2
/// on (lo, hi) with constant boundary value g: the solution is the line
/// through the boundary point tangent to psi.
struct Tangency {
    double left = 0.0;
    double right = 0.0;
};

std::optional<Tangency> parabola_tangency(double lo, double hi, double c, double peak, double a, double g) {
    const double q = (peak - g) / a;
    const double L = lo - c, R = hi - c;
    if (!(q > 0.0) || q >= L * L || q >= R * R) return std::nullopt;
    return Tangency{c + L + std::sqrt(L * L - q), c + R - std::sqrt(R * R - q)};
}

void run_scalar(const ScalarSpec& s, Run& run) {
    std::optional<ScalarObstacleProblem> problem;
    if (s.two_lobe) {
        auto fx = two_lobe_pinch_fixture(s.h, s.psor, s.a, s.c, s.b);
        run.summary()["calibrated_shift"] = fx.calibrated_shift;
        problem.emplace(std::move(fx.problem));
    } else {
        const GridPtr grid = build_grid(s.domain, s.h);
        const int dim = s.domain.dim;
        const ScalarField psi = sample_scalar(grid, [&](const Point& x) {
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) r2 += (x[a] - s.center[a]) * (x[a] - s.center[a]);
            return s.peak - s.curvature * r2;
        });
        problem.emplace(psi, ScalarField(grid, s.boundary_value));
    }
    const GridPtr& gp = problem->grid();
    const Grid& g = *gp;
    run.summary()["superharmonic"] = problem->superharmonic();
    run.summary()["nodes"] = g.interior_nodes().size() + g.boundary_nodes().size();

    const PsorResult res = solve_psor(*problem, s.psor);
    const ContactReport cr = extract_contact(res.u, *problem, s.thresholds, s.contact_tol);

    {
        auto header = node_columns(g.dim());
        header.insert(header.end(), {"u", "psi", "contact"});
        CsvWriter w(run.file("solution.csv"), header);
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (!g.active(n)) continue;
            auto row = node_row(g, n);
            row.insert(row.end(), {res.u[n], problem->psi()[n], cr.contact[n] ? 1.0 : 0.0});
            w.row(row);
        }
        w.close();
        run.record(run.file("solution.csv"));
    }
    write_faces(run, "free_boundary.csv", g, cr.faces);

    json cls;
    cls["free_boundary_points"] = cr.free_boundary_nodes.size();
    cls["regular"] = cr.count(FreeBoundaryClass::Regular);
    cls["singular"] = cr.count(FreeBoundaryClass::Singular);
    cls["indeterminate"] = cr.count(FreeBoundaryClass::Indeterminate);
    cls["components"] = contact_components(cr);
    cls["samples"] = json::array();
    for (const auto& smp : cr.samples) {
        cls["samples"].push_back({{"node", smp.node},
                                  {"position", point_json(g.position(smp.node), g.dim())},
                                  {"class", to_string(smp.cls)},
                                  {"radii", smp.radii},
                                  {"density", smp.density}});
    }
    run.write_json("classification.json", cls);

    if (g.dim() >= 2) {
        run.record(export_field_pgm(run.file("solution"), res.u));
        run.record(export_field_pgm(run.file("contact"), mask_field(gp, cr.contact)));
    }

    auto& sm = run.summary();
    sm["iterations"] = res.iterations;
    sm["residual"] = res.residual;
    sm["contact_nodes"] = std::count(cr.contact.begin(), cr.contact.end(), std::uint8_t{1});
    for (const char* key : {"free_boundary_points", "regular", "singular", "indeterminate", "components"}) sm[key] = cls[key];

    std::optional<Tangency> tangency;
    if (!s.two_lobe && g.dim() == 1) {
        const auto& box = std::get<BoxShape>(s.domain.shape);
        tangency = parabola_tangency(box.lo[0], box.hi[0], s.center[0], s.peak, s.curvature, s.boundary_value);
    }
    if (g.dim() == 1 && !cr.faces.empty()) {
        double left = cr.faces.front().midpoint[0], right = left;
        for (const auto& f : cr.faces) {
            left = std::min(left, f.midpoint[0]);
            right = std::max(right, f.midpoint[0]);
        }
        sm["free_boundary"] = {left, right};
    }

    if (run.checking()) {
        run.add_check("lcp_residual", res.residual <= s.psor.tol, res.residual, 0.0, s.psor.tol);
        if (tangency) {
            const auto& box = std::get<BoxShape>(s.domain.shape);
            auto psi = [&](double x) { return s.peak - s.curvature * (x - s.center[0]) * (x - s.center[0]); };
            auto exact = [&](double x) {
                const double gl = s.boundary_value;
                if (x < tangency->left) return gl + (psi(tangency->left) - gl) * (x - box.lo[0]) / (tangency->left - box.lo[0]);
                if (x > tangency->right) return gl + (psi(tangency->right) - gl) * (box.hi[0] - x) / (box.hi[0] - tangency->right);
                return psi(x);
            };
            double err = 0.0;
            for (std::size_t n = 0; n < g.size(); ++n) {
                if (g.active(n)) err = std::max(err, std::abs(res.u[n] - exact(g.position(n)[0])));
            }
            run.add_check("solution_error", err <= 5.0 * s.h, err, 0.0, 5.0 * s.h, "max |u - tangent-line solution|");
            if (cr.faces.empty()) {
                run.add_check("free_boundary_left", false, std::nan(""), tangency->left, 2.0 * s.h, "no contact");
                run.add_check("free_boundary_right", false, std::nan(""), tangency->right, 2.0 * s.h, "no contact");
            } else {
                const double left = sm["free_boundary"][0], right = sm["free_boundary"][1];
                run.add_check("free_boundary_left", std::abs(left - tangency->left) <= 2.0 * s.h, left, tangency->left, 2.0 * s.h);
                run.add_check("free_boundary_right", std::abs(right - tangency->right) <= 2.0 * s.h, right, tangency->right,
                              2.0 * s.h);
            }
            sm["tangency"] = {tangency->left, tangency->right};
        }
    }

    if (!s.perturbations.empty()) {
        const auto runs = schaeffer_perturbation_experiment(*problem, s.perturbations, s.psor, s.thresholds);
        CsvWriter w(run.file("perturbations.csv"),
                    {"t", "free_boundary_points", "regular", "singular", "indeterminate", "components"});
        json arr = json::array();
        for (const auto& r : runs) {
            w.row({r.t, static_cast<double>(r.free_boundary_points), static_cast<double>(r.regular),
                   static_cast<double>(r.singular), static_cast<double>(r.indeterminate), static_cast<double>(r.components)});
            arr.push_back({{"t", r.t}, {"singular", r.singular}, {"components", r.components}});
            if (run.checking() && s.two_lobe) {
                if (r.t == 0.0) {
                    run.add_check("pinch_singular_at_0", r.singular >= 1, static_cast<double>(r.singular), 1.0, 0.0,
                                  "at least one singular point");
                } else if (std::abs(r.t) >= 0.05) {
                    run.add_check("pinch_regular_at_" + format_number(r.t), r.singular == 0, static_cast<double>(r.singular),
                                  0.0, 0.0, "no singular point");
                }
            }
        }
        w.close();
        run.record(run.file("perturbations.csv"));
        sm["perturbations"] = arr;
    }
}

// ---------------------------------------------------------------------------
// constraint_map

MapFunction boundary_function(const MapSpec& s) {
    const int dim = s.domain.dim;
    switch (s.map) {
        case MapKind::Identity:
            return [dim](const Point& x, std::span<double> out) {
                for (int a = 0; a < dim; ++a) out[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(a)];
            };
        case MapKind::Hedgehog:
            return [dim, c = s.map_center](const Point& x, std::span<double> out) {
                double r2 = 0.0;
                for (int a = 0; a < dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
                const double r = std::sqrt(r2);
                for (int a = 0; a < dim; ++a) out[static_cast<std::size_t>(a)] = r > 0.0 ? (x[a] - c[a]) / r : (a == 0 ? 1.0 : 0.0);
            };
        case MapKind::Constant:
            return [m = s.m, v = s.value](const Point&, std::span<double> out) {
                for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(c)] = v[static_cast<std::size_t>(c)];
            };
        case MapKind::Uk:
            break;
    }
    return [k = s.k](const Point& x, std::span<double> out) {
        const std::complex<double> z(x[0], x[1]);
        const std::complex<double> z2 = z * z;
        std::complex<double> zk(1.0, 0.0);
        for (int i = 0; i < k; ++i) zk *= z;
        out[0] = z2.real();
        out[1] = z2.imag();
        out[2] = zk.real();
    };
}

void write_distance(Run& run, const DistanceReport& dr) {
    const Grid& g = *dr.d.grid();
    auto header = node_columns(g.dim());
    header.insert(header.end(), {"d", "defect"});
    CsvWriter w(run.file("distance.csv"), header);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        auto row = node_row(g, n);
        row.insert(row.end(), {dr.d[n], dr.defect[n]});
        w.row(row);
    }
    w.close();
    run.record(run.file("distance.csv"));
    CsvWriter m(run.file("modulus.csv"), {"step", "omega_d", "omega_u"});
    for (const auto& r : dr.modulus) m.row({static_cast<double>(r.step), r.omega_d, r.omega_u});
    m.close();
    run.record(run.file("modulus.csv"));
}

/// Rescaled energies at each point over dyadic radii; one CSV row per (point, radius).
std::vector<MonotonicityReport> write_monotonicity(Run& run, const std::string& name, const ScalarField& density,
                                                   const std::vector<Point>& points, const std::vector<double>& radii,
                                                   double slack) {
    const int dim = density.grid()->dim();
    std::vector<MonotonicityReport> out;
    auto header = std::vector<std::string>{"point", "x"};
    if (dim > 1) header.emplace_back("y");
    if (dim > 2) header.emplace_back("z");
    header.insert(header.end(), {"r", "energy"});
    CsvWriter w(run.file(name), header);
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.push_back(rescaled_energy_from_density(density, points[i], radii, slack));
        for (std::size_t j = 0; j < out.back().radii.size(); ++j) {
            std::vector<double> row{static_cast<double>(i)};
            for (int a = 0; a < dim; ++a) row.push_back(points[i][static_cast<std::size_t>(a)]);
            row.insert(row.end(), {out.back().radii[j], out.back().energies[j]});
            w.row(row);
        }
    }
    w.close();
    run.record(run.file(name));
    return out;
}

void run_map(const MapSpec& s, Run& run) {
    const GridPtr grid = build_grid(s.domain, s.h);
    const Grid& g = *grid;
    const ConstraintMapProblem problem(grid, s.body, s.m, boundary_function(s));
    const ConstraintSolveResult res = solve_projected_gradient(problem, s.solver);
    const VectorField& u = res.u;

    write_field_csv(run.file("solution.csv"), u);
    run.record(run.file("solution.csv"));
    if (g.dim() >= 2) run.record(export_field_pgm(run.file("solution"), u));

    const ContactReport contact = map_contact_report(u, s.body, s.contact_tol);
    write_faces(run, "free_boundary.csv", g, contact.faces);
    SingularityReport sing = detect_discontinuities(u, s.eps, &s.body, s.flat_tol);
    if (s.branch_tol > 0.0) sing.branch_points = detect_branch_points(u, s.branch_tol, contact.contact);
    run.write_json("singularities.json", singularities_json(sing, g.dim()));

    const DistanceReport dr = distance_diagnostics(u, s.body);
    write_distance(run, dr);
    if (g.dim() >= 2) run.record(export_field_pgm(run.file("distance"), dr.d));

    std::vector<MonotonicityReport> mono;
    if (!s.points.empty()) {
        mono = write_monotonicity(run, "monotonicity.csv", energy_density(u), s.points, dyadic_radii(s.h, s.r_max), s.slack);
    }

    double min_sd = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.active(n)) {
            Vec y{};
            std::copy(u.at(n).begin(), u.at(n).end(), y.begin());
            min_sd = std::min(min_sd, s.body.signed_distance(y));
        }
    }
    double mean_radius = std::nan("");
    if (!contact.faces.empty()) {
        double sum = 0.0;
        for (const auto& f : contact.faces) {
            double r2 = 0.0;
            for (int a = 0; a < g.dim(); ++a) r2 += f.midpoint[a] * f.midpoint[a];
            sum += std::sqrt(r2);
        }
        mean_radius = sum / static_cast<double>(contact.faces.size());
    }

    auto& sm = run.summary();
    sm["iterations"] = res.iterations;
    sm["energy"] = res.energy;
    sm["converged"] = res.converged;
    sm["tie_breaks"] = res.tie_breaks;
    sm["contact_nodes"] = std::count(contact.contact.begin(), contact.contact.end(), std::uint8_t{1});
    sm["free_boundary_faces"] = contact.faces.size();
    sm["discontinuity_candidates"] = sing.discontinuities.size();
    sm["min_signed_distance"] = min_sd;
    if (std::isfinite(mean_radius)) sm["mean_free_boundary_radius"] = mean_radius;

    if (!res.converged) {
        throw NotConverged("constraint-map solver stopped at max_iters", res.last_relative_decrease, res.iterations);
    }
    if (!run.checking()) return;

    run.add_check("feasible", min_sd >= -1e-10, min_sd, 0.0, 1e-10, "min signed distance of u to the body");
    if (!mono.empty()) {
        std::size_t bad = 0;
        for (const auto& m : mono) bad += m.monotone ? 0 : 1;
        run.add_check("monotonicity", bad == 0, static_cast<double>(bad), 0.0, s.slack, "points with a decreasing rescaled energy");
    }
    if (s.radial) {
        const auto& ball = std::get<BallShape>(s.domain.shape);
        const double rho = radial_free_boundary_radius(ball.radius);
        run.add_check("free_boundary_radius", std::abs(mean_radius - rho) <= 0.05, mean_radius, rho, 0.05);
        const std::size_t count = sing.discontinuities.size();
        double off = std::numeric_limits<double>::infinity();
        if (count == 1) {
            const Point p = sing.discontinuities.front().position;
            off = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        run.add_check("single_candidate_at_origin", count == 1 && off <= 0.5 * s.h, static_cast<double>(count), 1.0, 0.0,
                      "candidate count; the candidate must sit on the origin node");
        const double osc = local_oscillation(dr.d, Point{}, 2.0 * s.h);
        run.add_check("distance_oscillation", osc <= 10.0 * s.h, osc, 0.0, 10.0 * s.h, "osc of dist(u, O) within 2h of 0");
        const double jump = antipodal_jump(u, Point{}, 2.0 * s.h);
        run.add_check("direction_jump", std::abs(jump - 2.0) <= 0.1, jump, 2.0, 0.1, "antipodal jump of u/|u| within 2h of 0");
    }
}

// ---------------------------------------------------------------------------
// flat_piece

void write_candidates(Run& run, const std::string& name, const FlatPieceReport& r) {
    CsvWriter w(run.file(name), {"node", "x", "y", "z", "energy", "distance_h", "flat_hit"});
    for (std::size_t i = 0; i < r.singularities.discontinuities.size(); ++i) {
        const auto& c = r.singularities.discontinuities[i];
        w.row({static_cast<double>(c.node), c.position[0], c.position[1], c.position[2], c.energy, r.candidate_distance_h[i],
               c.flat_hit ? 1.0 : 0.0});
    }
    w.close();
    run.record(run.file(name));
}

json flat_summary(const FlatPieceReport& r) {
    return {{"iterations", r.solution.iterations},
            {"energy", r.solution.energy},
            {"converged", r.solution.converged},
            {"candidates", r.singularities.discontinuities.size()},
            {"min_distance_h", std::isfinite(r.min_distance_h) ? json(r.min_distance_h) : json(nullptr)},
            {"near_free_boundary", r.near_free_boundary},
            {"image_on_flat", r.image_on_flat},
            {"within_4h", r.within_4h}};
}

void run_flat(const FlatSpec& s, Run& run) {
    const FlatPieceReport r = flat_piece_experiment(s.cfg);
    write_field_csv(run.file("solution.csv"), r.solution.u);
    run.record(run.file("solution.csv"));
    run.record(export_field_pgm(run.file("solution"), r.solution.u));
    run.record(export_field_pgm(run.file("contact"), mask_field(r.solution.u.grid(), r.contact.contact)));
    write_faces(run, "free_boundary.csv", *r.solution.u.grid(), r.contact.faces);
    write_candidates(run, "candidates.csv", r);
    run.write_json("singularities.json", singularities_json(r.singularities, 3, r.candidate_distance_h));
    run.summary() = flat_summary(r);
    run.summary()["body"] = s.cfg.body.kind();
    if (!r.solution.converged) {
        throw NotConverged("constraint-map solver stopped at max_iters", r.solution.last_relative_decrease, r.solution.iterations);
    }
    if (!run.checking()) return;
    if (!s.expect_flat) {
        run.add_check("no_candidate_within_4h", r.within_4h == 0, static_cast<double>(r.within_4h), 0.0, 0.0,
                      "candidates within 4h of the free boundary");
        return;
    }
    if (r.near_free_boundary && r.image_on_flat) {
        run.add_check("flat_candidate", true, r.min_distance_h, 2.0, 0.0, "candidate within 2h of the free boundary on a flat piece");
        return;
    }
    if (s.refine_h <= 0.0) {
        run.add_check("flat_candidate", false, r.min_distance_h, 2.0, 0.0, "no flat candidate within 2h; no refinement configured");
        return;
    }
    FlatPieceConfig fine = s.cfg;
    fine.h = s.refine_h;
    const FlatPieceReport rf = flat_piece_experiment(fine);
    write_candidates(run, "refined_candidates.csv", rf);
    run.summary()["refined"] = flat_summary(rf);
    const bool trend = rf.min_distance_h < r.min_distance_h;
    run.add_check("flat_candidate_trend", trend, rf.min_distance_h, r.min_distance_h, 0.0,
                  "min candidate distance in units of h must drop under refinement");
}

// ---------------------------------------------------------------------------
// axisym

void run_axisym(const AxisymSpec& s, Run& run) {
    const AxisymProblem problem(s.h, s.k, s.scale);
    const AxisymGrid& g = *problem.grid;
    const AxisymResult res = solve_axisym(problem, s.solver);
    const AxisymField& u = res.u;
    write_field_csv(run.file("reduced.csv"), u);
    run.record(run.file("reduced.csv"));

    const auto contact = axisym_contact_mask(u, s.contact_tol);
    std::vector<double> mask(g.size(), 0.0), norm(g.size(), 0.0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        mask[n] = contact[n] ? 1.0 : 0.0;
        norm[n] = g.active(n) ? u.norm(n) : 0.0;
    }
    run.record(export_axisym_pgm(run.file("contact.pgm"), g, mask));
    run.record(export_axisym_pgm(run.file("norm.pgm"), g, norm));

    const auto faces = axisym_free_boundary(u, contact);
    {
        CsvWriter w(run.file("faces.csv"), {"contact_node", "free_node", "r", "z"});
        for (const auto& f : faces) w.row({static_cast<double>(f.contact_node), static_cast<double>(f.free_node), f.r, f.z});
        w.close();
        run.record(run.file("faces.csv"));
    }

    const auto axis = axis_branch_check(u, s.k, s.branch_tol, s.contact_tol);
    {
        CsvWriter w(run.file("axis.csv"), {"node", "z", "norm_minus_one", "dx_u1", "dy_u2", "dz_u3", "radial_quotient",
                                           "max_partial", "contact", "free_boundary", "branch"});
        for (const auto& a : axis) {
            w.row({static_cast<double>(a.node), a.z, a.norm_minus_one, a.dx_u1, a.dy_u2, a.dz_u3, a.radial_quotient, a.max_partial,
                   a.contact ? 1.0 : 0.0, a.free_boundary ? 1.0 : 0.0, a.branch ? 1.0 : 0.0});
        }
        w.close();
        run.record(run.file("axis.csv"));
    }

    json fits = json::array();
    double worst_gap = 0.0;
    bool cone_ok = true;
    std::size_t fb_nodes = 0, fb_branch = 0;
    double worst_partial = 0.0;
    for (const auto& a : axis) {
        if (!a.free_boundary) continue;
        ++fb_nodes;
        fb_branch += a.branch ? 1 : 0;
        worst_partial = std::max(worst_partial, a.max_partial);
        json fj{{"vertex_z", a.z}};
        try {
            const ConeFitReport c = cone_fit(faces, s.h, a.z, s.k, s.r_lo_h * s.h, s.r_hi_h * s.h);
            fj.update({{"phi", c.phi},
                       {"cos_phi", c.cos_phi},
                       {"nearest_zero", c.nearest_zero},
                       {"zero_gap", c.zero_gap},
                       {"residual", c.residual},
                       {"samples", c.samples},
                       {"axis_hugging", c.axis_hugging}});
            const bool ok = c.axis_hugging || c.zero_gap <= s.cone_tol;
            cone_ok = cone_ok && ok;
            if (!c.axis_hugging) worst_gap = std::max(worst_gap, c.zero_gap);
        } catch (const DomainError& e) {
            fj["error"] = e.what();
            cone_ok = false;
        }
        fits.push_back(fj);
    }
    run.write_json("cone_fit.json", {{"k", s.k}, {"legendre_order", 2 * s.k - 1}, {"fits", fits}});

    if (s.lift_h > 0.0) {
        const GridPtr g3 = build_grid(ShapeSpec::ball(3, Point{}, 1.0), s.lift_h);
        const VectorField lifted = lift(u, s.k, g3);
        write_field_csv(run.file("lifted.csv"), lifted);
        run.record(run.file("lifted.csv"));
    }

    auto& sm = run.summary();
    sm["iterations"] = res.iterations;
    sm["energy"] = res.energy;
    sm["converged"] = res.converged;
    sm["free_boundary_faces"] = faces.size();
    sm["axis_free_boundary_nodes"] = fb_nodes;
    sm["cone_fits"] = fits;

    if (!res.converged) throw NotConverged("axisymmetric solver stopped at max_iters", res.last_max_update, res.iterations);
    if (!run.checking()) return;
    run.add_check("axis_branch", fb_nodes > 0 && fb_branch == fb_nodes, worst_partial, 0.0, s.branch_tol,
                  "largest axis partial over " + std::to_string(fb_nodes) + " axis free-boundary nodes");
    run.add_check("cone_quantization", fb_nodes > 0 && cone_ok, worst_gap, 0.0, s.cone_tol,
                  "|cos phi - nearest zero of P_" + std::to_string(2 * s.k - 1) + "| or axis hugging");
}

// ---------------------------------------------------------------------------
// geodesic

void run_geodesic(const GeodesicSpec& s, Run& run) {
    const GeodesicProblem problem(s.a, s.b, s.body);
    const GeodesicPath path = shortest_path_discrete(problem, s.n_points, s.cfg);
    {
        CsvWriter w(run.file("path.csv"), {"i", "x", "y"});
        for (std::size_t i = 0; i < path.vertices.size(); ++i) w.row({static_cast<double>(i), path.vertices[i][0], path.vertices[i][1]});
        w.close();
        run.record(run.file("path.csv"));
    }
    run.write_json("summary.json", {{"length", path.length}, {"touching", path.touching}, {"basin", path.basin}}, -1);

    auto& sm = run.summary();
    sm["length"] = path.length;
    sm["touching"] = path.touching;
    sm["basin"] = path.basin;
    sm["iterations"] = path.iterations;
    sm["init"] = to_string(s.cfg.init);

    const auto* disk = std::get_if<Ball>(&s.body.shape());
    if (!disk) return;
    const GeodesicPath closed = shortest_path_disk(s.a, s.b, *disk, s.dtheta);
    {
        CsvWriter w(run.file("closed_form.csv"), {"i", "x", "y"});
        for (std::size_t i = 0; i < closed.vertices.size(); ++i) w.row({static_cast<double>(i), closed.vertices[i][0], closed.vertices[i][1]});
        w.close();
        run.record(run.file("closed_form.csv"));
    }
    double target = closed.length;
    std::string note = "closed-form shortest path";
    if (s.cfg.init == GeodesicInit::Long) {
        target = std::max(wrap_path_length(s.a, s.b, *disk, true), wrap_path_length(s.a, s.b, *disk, false));
        note = "closed-form longer wrap";
    }
    sm["closed_form_length"] = closed.length;
    sm["target_length"] = target;
    if (run.checking()) {
        run.add_check("length", std::abs(path.length - target) <= s.rel_tol * target, path.length, target, s.rel_tol * target, note);
    }
}

// ---------------------------------------------------------------------------
// fixtures

void run_fixtures(const FixtureSpec& s, Run& run) {
    const GridPtr grid = build_grid(ShapeSpec::box(2, {-0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}), s.h);
    const Grid& g = *grid;
    const double branch_tol = s.branch_tol > 0.0 ? s.branch_tol : 0.5 * s.h;
    const std::size_t origin = g.nearest_node(Point{});
    CsvWriter table(run.file("harmonicity.csv"), {"k", "max_laplacian", "max_laplacian_over_h2", "branch_points", "origin_only"});
    json rows = json::array();
    for (int k : s.ks) {
        const VectorField u = fixture_uk(k, grid);
        double lap = 0.0;
        for (int c = 0; c < 3; ++c) {
            const ScalarField l = laplacian_apply(u, c);
            for (std::size_t n : g.interior_nodes()) lap = std::max(lap, std::abs(l[n]));
        }
        const auto branch = detect_branch_points(u, branch_tol);
        const bool origin_only = branch.size() == 1 && branch.front() == origin;
        const double ratio = lap / (s.h * s.h);
        table.row({static_cast<double>(k), lap, ratio, static_cast<double>(branch.size()), origin_only ? 1.0 : 0.0});
        rows.push_back({{"k", k}, {"max_laplacian_over_h2", ratio}, {"branch_points", branch.size()}, {"origin_only", origin_only}});
        const std::string stem = "uk" + std::to_string(k);
        write_field_csv(run.file(stem + ".csv"), u);
        run.record(run.file(stem + ".csv"));
        run.record(export_field_pgm(run.file(stem), u));
        if (run.checking()) {
            run.add_check("harmonic_k" + std::to_string(k), ratio <= s.harmonic_c, ratio, 0.0, s.harmonic_c, "max |Lap_h u_k| / h^2");
            run.add_check("branch_k" + std::to_string(k), origin_only, static_cast<double>(branch.size()), 1.0, 0.0,
                          "branch points; exactly the origin node expected");
        }
    }
    table.close();
    run.record(run.file("harmonicity.csv"));
    run.summary()["uk"] = rows;

    if (!s.hedgehog) return;
    const GridPtr g3 = build_grid(ShapeSpec::ball(3, Point{}, s.hedgehog_radius), s.hedgehog_h);
    const VectorField u = fixture_hedgehog(g3);
    const auto mono = write_monotonicity(run, "hedgehog.csv", energy_density(u), s.points, s.radii, s.slack);
    const double target = 8.0 * std::numbers::pi;
    json hj = json::array();
    for (const auto& m : mono) hj.push_back({{"x0", point_json(m.x0, 3)}, {"radii", m.radii}, {"energies", m.energies}, {"monotone", m.monotone}});
    run.summary()["hedgehog"] = hj;
    if (!run.checking()) return;
    std::size_t bad = 0;
    for (const auto& m : mono) bad += m.monotone ? 0 : 1;
    run.add_check("hedgehog_monotonicity", bad == 0, static_cast<double>(bad), 0.0, s.slack, "points with a decreasing rescaled energy");
    for (const auto& m : mono) {
        if (m.x0 != Point{}) continue;
        double worst = 0.0;
        for (double e : m.energies) worst = std::max(worst, std::abs(e - target) / target);
        run.add_check("hedgehog_8pi", !m.energies.empty() && worst <= s.energy_tol, worst, 0.0, s.energy_tol,
                      "largest relative deviation of E(r) from 8 pi at the origin");
    }
}

// ---------------------------------------------------------------------------

json check_json(const CheckResult& c) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"name", c.name}, {"pass", c.pass}, {"value", num(c.value)}, {"target", num(c.target)}, {"tolerance", num(c.tolerance)},
            {"note", c.note}};
}

json report_json(const ExperimentReport& r) {
    json j{{"name", r.name}, {"kind", r.kind}, {"status", r.status}, {"wall_time_s", r.wall_time}, {"files", r.files}};
    if (!r.error.empty()) j["error"] = r.error;
    j["images"] = json::array();
    for (const auto& img : r.images) {
        j["images"].push_back({{"path", img.path.generic_string()},
                               {"width", img.width},
                               {"height", img.height},
                               {"lo", img.lo},
                               {"hi", img.hi}});
    }
    j["checks"] = json::array();
    for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
    j["summary"] = r.summary;
    return j;
}

}  // namespace

json load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
}

void validate_experiment(const json& experiment) { (void)parse_experiment(experiment); }

std::vector<json> experiments_of(const json& config) {
    if (!config.is_object()) throw ConfigError("", "config must be a JSON object");
    const bool single = config.contains("experiment");
    const bool batch = config.contains("experiments");
    if (single == batch) throw ConfigError("experiment", "config needs exactly one of \"experiment\" or \"experiments\"");
    std::vector<json> out;
    if (single) {
        validate_experiment(config.at("experiment"));
        out.push_back(config.at("experiment"));
        return out;
    }
    const json& arr = config.at("experiments");
    if (!arr.is_array() || arr.empty()) throw ConfigError("experiments", "must be a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string prefix = "experiments[" + std::to_string(i) + "]";
        Parsed p;
        try {
            p = parse_experiment(arr[i]);
        } catch (const ConfigError& e) {
            const std::string f = e.field_path();
            const std::string what = std::string(e.what()).substr(f.size() + 2);
            throw ConfigError(f.empty() ? prefix : prefix + "." + f, what);
        }
        if (!names.insert(p.name).second) throw ConfigError(prefix + ".name", "duplicate experiment name \"" + p.name + "\"");
        out.push_back(arr[i]);
    }
    return out;
}

ExperimentReport run_experiment(const json& experiment, const fs::path& out_root, bool check) {
    const Parsed parsed = parse_experiment(experiment);
    ExperimentReport report;
    report.name = parsed.name;
    report.kind = parsed.kind;
    const auto t0 = std::chrono::steady_clock::now();
    Run run(report, out_root, check);
    json failure;
    try {
        std::visit(
            [&](const auto& spec) {
                using T = std::decay_t<decltype(spec)>;
                if constexpr (std::is_same_v<T, ScalarSpec>) run_scalar(spec, run);
                else if constexpr (std::is_same_v<T, MapSpec>) run_map(spec, run);
                else if constexpr (std::is_same_v<T, FlatSpec>) run_flat(spec, run);
                else if constexpr (std::is_same_v<T, AxisymSpec>) run_axisym(spec, run);
                else if constexpr (std::is_same_v<T, GeodesicSpec>) run_geodesic(spec, run);
                else run_fixtures(spec, run);
            },
            parsed.spec);
    } catch (const NotConverged& e) {
        failure = {{"error", e.what()}, {"type", "convergence"}, {"last_change", e.last()}, {"iterations", e.iterations()}};
    } catch (const ConvergenceError& e) {
        failure = {{"error", e.what()}, {"type", "convergence"}, {"last_residual", e.last_residual()}, {"iterations", e.iterations()}};
    } catch (const InvalidProblem& e) {
        failure = {{"error", e.what()}, {"type", "invalid_problem"}};
    } catch (const GridError& e) {
        failure = {{"error", e.what()}, {"type", "grid"}};
    } catch (const std::exception& e) {
        failure = {{"error", e.what()}, {"type", "error"}};
    }
    if (!failure.is_null()) {
        report.status = kExitSolverFailed;
        report.error = failure["error"].get<std::string>();
        try {
            run.write_json("failure.json", failure);
        } catch (const IoError&) {
            // The failure is still reported through the manifest.
        }
    } else if (check && !report.checks_pass()) {
        report.status = kExitCheckFailed;
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

SuiteResult run_suite(const json& config, const fs::path& out_root, bool check, const std::string& config_path) {
    const auto experiments = experiments_of(config);
    fs::create_directories(out_root);
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult result;
    for (const auto& e : experiments) {
        result.reports.push_back(run_experiment(e, out_root, check));
        result.status = std::max(result.status, result.reports.back().status);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["tool"] = "fblab";
    manifest["versions"] = {{"fblab", version()},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"compiler", __VERSION__},
                            {"cxx_standard", __cplusplus}};
    manifest["config_path"] = config_path;
    manifest["config"] = config;
    manifest["determinism"] = true;
    manifest["threads"] = worker_count();
    manifest["check"] = check;
    manifest["wall_time_s"] = wall;
    manifest["status"] = result.status;
    manifest["experiments"] = json::array();
    for (const auto& r : result.reports) manifest["experiments"].push_back(report_json(r));

    result.manifest = out_root / "manifest.json";
    std::ofstream out(result.manifest, std::ios::binary);
    if (!out) throw IoError("cannot open " + result.manifest.string() + " for writing");
    out << manifest.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write to " + result.manifest.string() + " failed");
    return result;
}

}  // namespace fblab
