#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>

namespace fblab {

/// Point of the target space R^m (m <= 3, trailing entries zero).
using Vec = std::array<double, 3>;

struct Ball {
    Vec center{};
    double radius = 1.0;
};

struct Ellipsoid {
    Vec center{};
    Vec semi_axes{1.0, 1.0, 1.0};
};

/// Ball intersected with the slab |y_last - center_last| <= half_width.
/// Its boundary has two flat discs joined to a spherical zone along two
/// edge circles.
struct SlabCappedBall {
    Vec center{};
    double radius = 1.0;
    double half_width = 0.5;
};

/// Obstacle {y : (y - point) . normal < 0}; normal is the unit outward normal.
struct HalfSpace {
    Vec point{};
    Vec normal{0.0, 0.0, 1.0};
};

/// Result of a projection onto the obstacle boundary.
struct Projection {
    Vec point{};
    /// Nearest point was not unique (medial axis); a deterministic choice was made.
    bool tie = false;
};

/// Convex obstacle O in R^m.
class ConvexBody {
public:
    using Shape = std::variant<Ball, Ellipsoid, SlabCappedBall, HalfSpace>;

    /// Validates parameters; throws DomainError on degenerate input.
    ConvexBody(int m, Shape shape);

    static ConvexBody ball(int m, Vec center, double radius) { return {m, Ball{center, radius}}; }
    static ConvexBody ellipsoid(int m, Vec center, Vec semi_axes) { return {m, Ellipsoid{center, semi_axes}}; }
    static ConvexBody slab_capped_ball(int m, Vec center, double radius, double half_width) {
        return {m, SlabCappedBall{center, radius, half_width}};
    }
    static ConvexBody half_space(int m, Vec point, Vec normal) { return {m, HalfSpace{point, normal}}; }

    int dim() const noexcept { return m_; }
    const Shape& shape() const noexcept { return shape_; }
    std::string kind() const;

    /// Diameter used to scale finite-difference steps (1 for half-spaces).
    double diameter() const noexcept;

    /// Negative inside O, zero on the boundary, positive outside.
    double signed_distance(const Vec& p) const noexcept;

    /// Nearest point of the boundary for any p (inside or outside).
    Projection nearest_boundary_point(const Vec& p) const noexcept;

    /// Identity when p is outside or on the boundary; otherwise the nearest
    /// boundary point.
    Projection project_out(const Vec& p) const noexcept;

    /// Outward unit normal at the boundary point nearest to p.
    Vec outward_normal(const Vec& p) const noexcept;

    /// Hessian of dist(., O) at y (m x m, row-major into out). Closed form for
    /// Ball and HalfSpace, central finite differences of signed_distance with
    /// step 1e-4 * diameter otherwise. Throws DomainError if y is strictly inside.
    void distance_hessian(const Vec& y, std::span<double> out) const;

    /// Hess(dist(., O))_y [G, G] for the m x n matrix G (row-major, entry (c, a)
    /// at c * n + a), i.e. sum_a G_a^T H G_a over its columns.
    double distance_hessian_quadform(const Vec& y, std::span<const double> G, int n) const;

    /// True when every principal curvature at the boundary point nearest to y
    /// is below tol, i.e. that point lies on a flat piece.
    bool flat_witness(const Vec& y, double tol = 1e-3) const;

private:
    void finite_difference_hessian(const Vec& y, std::span<double> out) const;

    int m_;
    Shape shape_;
};

}  // namespace fblab
