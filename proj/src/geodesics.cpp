#include "fblab/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "fblab/error.hpp"

namespace fblab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm2d(double x, double y) { return std::hypot(x, y); }

double wrap_mod(double x) {
    x = std::fmod(x, kTwoPi);
    return x < 0.0 ? x + kTwoPi : x;
}

struct WrapGeometry {
    double ta = 0.0, tb = 0.0;       // tangent lengths
    double start = 0.0, sweep = 0.0;  // arc start angle and signed sweep
};

WrapGeometry wrap_geometry(const Vec& a, const Vec& b, const Ball& d, bool ccw) {
    const double da = norm2d(a[0] - d.center[0], a[1] - d.center[1]);
    const double db = norm2d(b[0] - d.center[0], b[1] - d.center[1]);
    const double tha = std::atan2(a[1] - d.center[1], a[0] - d.center[0]);
    const double thb = std::atan2(b[1] - d.center[1], b[0] - d.center[0]);
    const double aa = std::acos(std::min(1.0, d.radius / da));
    const double ab = std::acos(std::min(1.0, d.radius / db));
    WrapGeometry w;
    w.ta = std::sqrt(std::max(0.0, da * da - d.radius * d.radius));
    w.tb = std::sqrt(std::max(0.0, db * db - d.radius * d.radius));
    if (ccw) {
        w.start = tha + aa;
        w.sweep = wrap_mod((thb - ab) - (tha + aa));
    } else {
        w.start = tha - aa;
        w.sweep = -wrap_mod((tha - aa) - (thb + ab));
    }
    return w;
}

Vec lerp(const Vec& p, const Vec& q, double t) { return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), 0.0}; }

}  // namespace

GeodesicProblem::GeodesicProblem(Vec a_, Vec b_, ConvexBody body_) : a(a_), b(b_), body(std::move(body_)) {
    if (body.dim() != 2) throw InvalidProblem("geodesics are planar: body must have dimension 2");
    a[2] = b[2] = 0.0;
    if (body.signed_distance(a) < 0.0 || body.signed_distance(b) < 0.0) {
        throw InvalidProblem("geodesic endpoints must lie outside the body");
    }
}

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm2d(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

double path_length(const std::vector<Vec>& v) {
    double s = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) s += norm2d(v[i][0] - v[i - 1][0], v[i][1] - v[i - 1][1]);
    return s;
}

double wrap_path_length(const Vec& a, const Vec& b, const Ball& disk, bool ccw) {
    const WrapGeometry w = wrap_geometry(a, b, disk, ccw);
    return w.ta + w.tb + disk.radius * std::abs(w.sweep);
}

GeodesicPath shortest_path_disk(const Vec& a, const Vec& b, const Ball& disk, double dtheta) {
    if (!(disk.radius > 0.0)) throw InvalidProblem("disk radius must be positive");
    if (!(dtheta > 0.0)) throw DomainError("arc resolution must be positive");
    const double da = norm2d(a[0] - disk.center[0], a[1] - disk.center[1]);
    const double db = norm2d(b[0] - disk.center[0], b[1] - disk.center[1]);
    if (da < disk.radius || db < disk.radius) throw InvalidProblem("geodesic endpoints must lie outside the disk");
    GeodesicPath path;
    if (point_segment_distance(disk.center, a, b) >= disk.radius) {
        path.vertices = {{a[0], a[1], 0.0}, {b[0], b[1], 0.0}};
        path.length = norm2d(b[0] - a[0], b[1] - a[1]);
        path.touching = point_segment_distance(disk.center, a, b) == disk.radius;
        path.basin = "straight";
        return path;
    }
    const double lccw = wrap_path_length(a, b, disk, true);
    const double lcw = wrap_path_length(a, b, disk, false);
    // Exact ties go counter-clockwise.
    const bool ccw = lccw <= lcw;
    const WrapGeometry w = wrap_geometry(a, b, disk, ccw);
    path.vertices.push_back({a[0], a[1], 0.0});
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(w.sweep) / dtheta)));
    for (int s = 0; s <= steps; ++s) {
        const double th = w.start + w.sweep * s / steps;
        path.vertices.push_back({disk.center[0] + disk.radius * std::cos(th), disk.center[1] + disk.radius * std::sin(th), 0.0});
    }
    path.vertices.push_back({b[0], b[1], 0.0});
    path.length = w.ta + w.tb + disk.radius * std::abs(w.sweep);
    path.touching = true;
    path.basin = ccw ? "ccw" : "cw";
    return path;
}

const char* to_string(GeodesicInit init) {
    switch (init) {
        case GeodesicInit::Short: return "short";
        case GeodesicInit::Long: return "long";
        case GeodesicInit::Straight: return "straight";
    }
    return "unknown";
}

namespace {

Vec body_center_2d(const ConvexBody& body) {
    return std::visit(
        [](const auto& s) -> Vec {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                return s.point;
            } else {
                return s.center;
            }
        },
        body.shape());
}

/// Deepest point of segment [p, q] and its signed distance. Signed distance
/// is convex along a line for a convex body (golden-section search) and
/// 1-Lipschitz, so segments whose end clearances sum past the length skip the
/// search.
struct DeepPoint {
    Vec point;
    double sd;
    double t;
};

DeepPoint deepest_point_oriented(const ConvexBody& body, const Vec& p, const Vec& q) {
    const double sp = body.signed_distance(p), sq = body.signed_distance(q);
    if (sp + sq >= norm2d(q[0] - p[0], q[1] - p[1])) return sp <= sq ? DeepPoint{p, sp, 0.0} : DeepPoint{q, sq, 1.0};
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = body.signed_distance(lerp(p, q, x1)), f2 = body.signed_distance(lerp(p, q, x2));
    for (int it = 0; it < 80 && hi - lo > 1e-8; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = body.signed_distance(lerp(p, q, x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = body.signed_distance(lerp(p, q, x2));
        }
    }
    const double t = 0.5 * (lo + hi);
    const Vec m = lerp(p, q, t);
    return {m, body.signed_distance(m), t};
}

/// Same search whichever way the segment is given, so reversed paths see
/// identical pushes.
DeepPoint deepest_point(const ConvexBody& body, const Vec& p, const Vec& q) {
    if (std::tie(p[0], p[1]) <= std::tie(q[0], q[1])) return deepest_point_oriented(body, p, q);
    DeepPoint d = deepest_point_oriented(body, q, p);
    d.t = 1.0 - d.t;
    return d;
}

/// n points spaced evenly by arc length along the polyline v.
std::vector<Vec> resample(const std::vector<Vec>& v, std::size_t n) {
    std::vector<double> s(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) s[i] = s[i - 1] + norm2d(v[i][0] - v[i - 1][0], v[i][1] - v[i - 1][1]);
    std::vector<Vec> out(n);
    std::size_t seg = 1;
    for (std::size_t j = 0; j < n; ++j) {
        const double target = s.back() * static_cast<double>(j) / static_cast<double>(n - 1);
        while (seg + 1 < v.size() && s[seg] < target) ++seg;
        const double span = s[seg] - s[seg - 1];
        out[j] = lerp(v[seg - 1], v[seg], span > 0.0 ? std::clamp((target - s[seg - 1]) / span, 0.0, 1.0) : 0.0);
    }
    out.front() = v.front();
    out.back() = v.back();
    return out;
}

struct RelaxOutcome {
    long iterations = 0;
    bool converged = false;
};

/// Jacobi sweeps toward neighbour midpoints with vertex projection and
/// segment push-out, on a fixed vertex count.
RelaxOutcome relax_polyline(const ConvexBody& body, std::vector<Vec>& v, const GeodesicConfig& cfg, double scale,
                            double loosen, long budget) {
    const std::size_t N = v.size();
    std::vector<Vec> next(v);
    std::vector<Vec> push(N);
    constexpr long kWindow = 100;
    double window_length = path_length(v);
    RelaxOutcome out;
    for (long it = 1; it <= budget; ++it) {
        for (std::size_t i = 1; i + 1 < N; ++i) {
            for (int k = 0; k < 2; ++k) {
                const double mid = 0.5 * (v[i - 1][k] + v[i + 1][k]);
                next[i][k] = v[i][k] + cfg.relax * (mid - v[i][k]);
            }
            next[i] = body.project_out(next[i]).point;
        }
        // Segments that dip into the body are pushed out with the least-norm
        // move of their free ends that lifts the deepest point by its depth.
        // Moves are summed per vertex, so the update is mirror symmetric, and
        // repeated until the polyline clears the body.
        for (int pass = 0; pass < 64; ++pass) {
            std::fill(push.begin(), push.end(), Vec{0.0, 0.0, 0.0});
            bool clear = true;
            for (std::size_t i = 0; i + 1 < N; ++i) {
                const auto [q, sd, t] = deepest_point(body, next[i], next[i + 1]);
                if (sd >= 0.0) continue;
                clear = false;
                // At an interior minimum the normal is perpendicular to the
                // segment; keep that part, falling back to the right-hand side
                // when it vanishes (segment through a medial point).
                const Vec n = body.outward_normal(q);
                const double sx = next[i + 1][0] - next[i][0], sy = next[i + 1][1] - next[i][1];
                const double seg = norm2d(sx, sy);
                double px = sy / seg, py = -sx / seg;
                const double along = n[0] * px + n[1] * py;
                if (along < -1e-12) {
                    px = -px;
                    py = -py;
                }
                const double wp = i == 0 ? 0.0 : 1.0 - t;
                const double wq = i + 2 == N ? 0.0 : t;
                const double w2 = wp * wp + wq * wq;
                if (w2 <= 0.0) continue;
                const double alpha = std::min(-sd / w2, seg);
                push[i][0] += alpha * wp * px;
                push[i][1] += alpha * wp * py;
                push[i + 1][0] += alpha * wq * px;
                push[i + 1][1] += alpha * wq * py;
            }
            if (clear) break;
            for (std::size_t i = 1; i + 1 < N; ++i) {
                next[i][0] += push[i][0];
                next[i][1] += push[i][1];
            }
        }
        double max_update = 0.0;
        for (std::size_t i = 1; i + 1 < N; ++i) {
            max_update = std::max({max_update, std::abs(next[i][0] - v[i][0]), std::abs(next[i][1] - v[i][1])});
        }
        std::swap(v, next);
        out.iterations = it;
        bool done = max_update <= cfg.tol * loosen * scale;
        // Smoothing and push-out can trade updates far below any length
        // change; stop once the length stalls over a window.
        if (!done && it % kWindow == 0) {
            const double len_now = path_length(v);
            done = std::abs(len_now - window_length) <= cfg.length_tol * loosen * scale;
            window_length = len_now;
        }
        if (done) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

}  // namespace

GeodesicPath shortest_path_discrete(const GeodesicProblem& problem, int n_points, const GeodesicConfig& cfg) {
    if (n_points < 8) throw DomainError("discrete geodesics need at least 8 points");
    if (!(cfg.relax > 0.0 && cfg.relax <= 1.0)) throw DomainError("relaxation weight must lie in (0, 1]");
    // Solve with the endpoints in a canonical order so that swapping them
    // returns exactly the reversed path.
    const bool swapped = std::tie(problem.b[0], problem.b[1]) < std::tie(problem.a[0], problem.a[1]);
    const ConvexBody& body = problem.body;
    const Vec& a = swapped ? problem.b : problem.a;
    const Vec& b = swapped ? problem.a : problem.b;
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len = norm2d(dx, dy);
    const double size = std::isfinite(body.diameter()) ? body.diameter() : std::max(1.0, len);
    const double scale = std::max({1.0, len, size});

    // Vertex counts from coarse to fine; each level starts from the previous
    // one resampled by arc length.
    std::vector<std::size_t> levels{static_cast<std::size_t>(n_points)};
    while ((levels.back() + 1) / 2 >= 8) levels.push_back((levels.back() + 1) / 2);
    std::reverse(levels.begin(), levels.end());

    // Detour point on the chosen side of the chord.
    const Vec c = body_center_2d(body);
    const Vec right{len > 0.0 ? dy / len : 0.0, len > 0.0 ? -dx / len : -1.0, 0.0};
    // Counter-clockwise passage about c runs on the right of the chord.
    const bool chord_clear = deepest_point(body, a, b).sd >= 0.0;
    bool ccw_shorter = dx * (c[1] - a[1]) - dy * (c[0] - a[0]) >= 0.0;
    if (const auto* disk = std::get_if<Ball>(&body.shape()); disk && !chord_clear) {
        ccw_shorter = wrap_path_length(a, b, *disk, true) <= wrap_path_length(a, b, *disk, false);
    }
    std::vector<Vec> v;
    if (cfg.init == GeodesicInit::Straight || (cfg.init == GeodesicInit::Short && chord_clear)) {
        v = {a, b};
    } else {
        const double side = (cfg.init == GeodesicInit::Short) == ccw_shorter ? 1.0 : -1.0;
        v = {a, {c[0] + side * 0.75 * size * right[0], c[1] + side * 0.75 * size * right[1], 0.0}, b};
    }

    GeodesicPath path;
    path.basin = to_string(cfg.init);
    for (std::size_t n : levels) {
        v = resample(v, n);
        for (std::size_t i = 1; i + 1 < n; ++i) v[i] = body.project_out(v[i]).point;
        // Coarse levels only seed the next one.
        const double loosen = n == levels.back() ? 1.0 : 1e4;
        const RelaxOutcome r = relax_polyline(body, v, cfg, scale, loosen, cfg.max_iters - path.iterations);
        path.iterations += r.iterations;
        if (!r.converged) throw ConvergenceError("discrete geodesic did not converge", path_length(v), path.iterations);
    }
    path.length = path_length(v);
    if (swapped) std::reverse(v.begin(), v.end());
    path.vertices = v;
    // The relaxed polyline stands off the body by O(segment^2).
    double longest = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) longest = std::max(longest, norm2d(v[i + 1][0] - v[i][0], v[i + 1][1] - v[i][1]));
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (deepest_point(body, v[i], v[i + 1]).sd <= longest * longest / size) path.touching = true;
    }
    return path;
}

}  // namespace fblab
