#pragma once

#include <string>
#include <vector>

#include "fblab/convex_body.hpp"

namespace fblab {

/// Shortest path in the plane between two points outside a convex body.
struct GeodesicProblem {
    Vec a{};
    Vec b{};
    ConvexBody body;

    /// Throws InvalidProblem when the body is not planar or an endpoint lies
    /// inside it.
    GeodesicProblem(Vec a, Vec b, ConvexBody body);
};

struct GeodesicPath {
    std::vector<Vec> vertices;
    double length = 0.0;
    /// Some segment comes within (longest segment)^2 / diameter of the body.
    bool touching = false;
    /// "straight", "ccw" or "cw" for closed-form paths; the initialisation
    /// side for discrete ones.
    std::string basin;
    long iterations = 0;
};

/// Distance from p to the segment [a, b].
double point_segment_distance(const Vec& p, const Vec& a, const Vec& b);

/// Closed form around a disk: the straight segment when it stays outside the
/// open disk, else tangent - arc - tangent on the side with the smaller wrap
/// angle. Arc vertices are spaced at most dtheta apart.
/// Throws InvalidProblem when an endpoint lies inside the disk.
GeodesicPath shortest_path_disk(const Vec& a, const Vec& b, const Ball& disk, double dtheta = 1e-2);

/// Tangent - arc - tangent length on a prescribed side (ccw = true: the disk
/// is passed counter-clockwise about its centre).
double wrap_path_length(const Vec& a, const Vec& b, const Ball& disk, bool ccw);

enum class GeodesicInit {
    /// Detour on the side of the shorter wrap.
    Short,
    /// Detour on the other side.
    Long,
    /// Straight segment, vertices pushed out of the body.
    Straight,
};

const char* to_string(GeodesicInit init);

struct GeodesicConfig {
    GeodesicInit init = GeodesicInit::Short;
    /// Smoothing weight toward the neighbour midpoint, in (0, 1].
    double relax = 1.0;
    /// Stop when no vertex moves more than tol * scale in a sweep...
    double tol = 1e-11;
    /// ...or the length changes by at most length_tol * scale over 100 sweeps.
    double length_tol = 1e-12;
    long max_iters = 2'000'000;
};

/// Polyline with n_points vertices (endpoints fixed) relaxed toward the
/// midpoint of its neighbours, which is projected gradient descent on the
/// discrete energy sum |v_{i+1} - v_i|^2. Every vertex is projected out of the
/// body and every segment that dips into the body is pushed out along the
/// normal at its deepest point, so the polyline never cuts the body and its
/// length is at least the true minimum. Runs coarse to fine (vertex counts
/// halving down to 8), each level seeded by arc-length resampling.
/// Throws DomainError for n_points < 8, ConvergenceError after max_iters.
GeodesicPath shortest_path_discrete(const GeodesicProblem& problem, int n_points = 64, const GeodesicConfig& cfg = {});

/// Polyline length.
double path_length(const std::vector<Vec>& vertices);

}  // namespace fblab
