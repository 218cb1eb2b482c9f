#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fblab {

inline constexpr int kMaxDim = 3;

/// Point in R^dim, dim <= 3; unused trailing coordinates are zero.
using Point = std::array<double, kMaxDim>;

enum class NodeClass : std::uint8_t { Interior, Boundary, Exterior };

std::string to_string(NodeClass c);

struct BoxShape {
    Point lo{};
    Point hi{};
};

struct BallShape {
    Point center{};
    double radius = 1.0;
};

/// Spherical shell inner <= |x - center| <= outer.
struct AnnulusShape {
    Point center{};
    double inner = 0.5;
    double outer = 1.0;
};

/// Descriptor of the physical domain.
struct ShapeSpec {
    int dim = 2;
    std::variant<BoxShape, BallShape, AnnulusShape> shape;

    static ShapeSpec box(int dim, Point lo, Point hi);
    static ShapeSpec ball(int dim, Point center, double radius);
    static ShapeSpec annulus(int dim, Point center, double inner, double outer);

    /// Negative inside, zero on the boundary, positive outside.
    double signed_distance(const Point& x) const;

    /// Nearest point of the domain boundary. Ties (ball centre) resolve
    /// along the first coordinate axis.
    Point nearest_boundary_point(const Point& x) const;
};

/// Uniform Cartesian lattice carrying a node classification for a shape.
///
/// Nodes farther than h/2 inside the shape are Interior, nodes within h/2
/// of the boundary are Boundary (they carry Dirichlet data), everything else
/// is Exterior. Interior nodes always have all 2*dim lattice neighbours
/// inside the lattice and classified Interior or Boundary.
class Grid {
public:
    /// Throws GridError when h <= 0 or no Interior node exists.
    Grid(ShapeSpec shape, double h);

    int dim() const noexcept { return shape_.dim; }
    double spacing() const noexcept { return h_; }
    const ShapeSpec& shape() const noexcept { return shape_; }
    const std::array<int, kMaxDim>& extents() const noexcept { return extents_; }
    const Point& origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return classes_.size(); }

    /// Lattice volume element h^dim.
    double cell_volume() const noexcept;

    std::array<int, kMaxDim> multi_index(std::size_t node) const noexcept;
    std::size_t linear_index(const std::array<int, kMaxDim>& idx) const noexcept;
    bool in_lattice(const std::array<int, kMaxDim>& idx) const noexcept;
    Point position(std::size_t node) const noexcept;

    std::ptrdiff_t stride(int axis) const noexcept { return strides_[static_cast<std::size_t>(axis)]; }

    /// Neighbour along axis in direction dir (+1/-1), or -1 if off the lattice.
    std::int64_t neighbor(std::size_t node, int axis, int dir) const noexcept;

    NodeClass node_class(std::size_t node) const noexcept { return classes_[node]; }
    bool active(std::size_t node) const noexcept { return classes_[node] != NodeClass::Exterior; }

    std::span<const std::size_t> interior_nodes() const noexcept { return interior_; }
    std::span<const std::size_t> boundary_nodes() const noexcept { return boundary_; }

    /// Position at which boundary data is sampled: the nearest point of the
    /// domain boundary (nearest-node snapping).
    Point boundary_sample_point(std::size_t node) const { return shape_.nearest_boundary_point(position(node)); }

    /// Nearest lattice node to x (clamped to the lattice).
    std::size_t nearest_node(const Point& x) const noexcept;

    /// Lattice parity (sum of indices mod 2); used for red-black sweeps.
    int color(std::size_t node) const noexcept;

private:
    ShapeSpec shape_;
    double h_;
    Point origin_{};
    std::array<int, kMaxDim> extents_{1, 1, 1};
    std::array<std::ptrdiff_t, kMaxDim> strides_{0, 0, 0};
    std::vector<NodeClass> classes_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Convenience wrapper: shared grid so fields can hold a reference by value.
GridPtr build_grid(const ShapeSpec& shape, double h);

/// One real value per lattice node.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double fill = 0.0);
    ScalarField(GridPtr grid, std::vector<double> values);

    const GridPtr& grid() const noexcept { return grid_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double& operator[](std::size_t node) noexcept { return values_[node]; }
    double operator[](std::size_t node) const noexcept { return values_[node]; }
    std::size_t size() const noexcept { return values_.size(); }

    bool all_finite() const noexcept;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// m real values per lattice node, node-major (node * m + component).
class VectorField {
public:
    VectorField() = default;
    VectorField(GridPtr grid, int m, double fill = 0.0);
    VectorField(GridPtr grid, int m, std::vector<double> values);

    const GridPtr& grid() const noexcept { return grid_; }
    int components() const noexcept { return m_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> at(std::size_t node) noexcept {
        return {values_.data() + node * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
    }
    std::span<const double> at(std::size_t node) const noexcept {
        return {values_.data() + node * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
    }
    double& operator()(std::size_t node, int c) noexcept { return values_[node * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)]; }
    double operator()(std::size_t node, int c) const noexcept {
        return values_[node * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)];
    }

    ScalarField component(int c) const;
    bool all_finite() const noexcept;

private:
    GridPtr grid_;
    int m_ = 1;
    std::vector<double> values_;
};

/// Samples f(x) at every active node (Interior and Boundary use the node
/// position; pass boundary_snap to sample Boundary nodes at their snapped
/// boundary position instead).
template <class F>
ScalarField sample_scalar(const GridPtr& grid, F&& f, bool boundary_snap = false) {
    ScalarField out(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        const bool snap = boundary_snap && grid->node_class(n) == NodeClass::Boundary;
        out[n] = f(snap ? grid->boundary_sample_point(n) : grid->position(n));
    }
    return out;
}

/// f(x, out) writes m components.
template <class F>
VectorField sample_vector(const GridPtr& grid, int m, F&& f, bool boundary_snap = false) {
    VectorField out(grid, m);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        const bool snap = boundary_snap && grid->node_class(n) == NodeClass::Boundary;
        f(snap ? grid->boundary_sample_point(n) : grid->position(n), out.at(n));
    }
    return out;
}

}  // namespace fblab
