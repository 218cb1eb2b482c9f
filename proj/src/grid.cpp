#include "fblab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fblab/error.hpp"

namespace fblab {

namespace {

double norm(const Point& x, const Point& c, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
    return std::sqrt(s);
}

Point radial_point(const Point& x, const Point& c, double radius, int dim) {
    const double r = norm(x, c, dim);
    Point p = c;
    if (r == 0.0) {
        p[0] += radius;
        return p;
    }
    for (int a = 0; a < dim; ++a) p[a] = c[a] + radius * (x[a] - c[a]) / r;
    return p;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string to_string(NodeClass c) {
    switch (c) {
        case NodeClass::Interior: return "interior";
        case NodeClass::Boundary: return "boundary";
        case NodeClass::Exterior: return "exterior";
    }
    return "unknown";
}

ShapeSpec ShapeSpec::box(int dim, Point lo, Point hi) { return {dim, BoxShape{lo, hi}}; }
ShapeSpec ShapeSpec::ball(int dim, Point center, double radius) { return {dim, BallShape{center, radius}}; }
ShapeSpec ShapeSpec::annulus(int dim, Point center, double inner, double outer) {
    return {dim, AnnulusShape{center, inner, outer}};
}

double ShapeSpec::signed_distance(const Point& x) const {
    return std::visit(overloaded{
                          [&](const BoxShape& b) {
                              // Exact for points inside; outside it is the Chebyshev-style
                              // lower bound, which is all classification needs.
                              double d = -INFINITY;
                              for (int a = 0; a < dim; ++a) d = std::max({d, b.lo[a] - x[a], x[a] - b.hi[a]});
                              return d;
                          },
                          [&](const BallShape& b) { return norm(x, b.center, dim) - b.radius; },
                          [&](const AnnulusShape& s) {
                              const double r = norm(x, s.center, dim);
                              return std::max(r - s.outer, s.inner - r);
                          }},
                      shape);
}

Point ShapeSpec::nearest_boundary_point(const Point& x) const {
    return std::visit(overloaded{
                          [&](const BoxShape& b) {
                              Point p = x;
                              bool outside = false;
                              for (int a = 0; a < dim; ++a) {
                                  if (x[a] < b.lo[a] || x[a] > b.hi[a]) outside = true;
                                  p[a] = std::clamp(x[a], b.lo[a], b.hi[a]);
                              }
                              if (outside) return p;
                              int best_axis = 0;
                              double best = INFINITY;
                              bool best_hi = false;
                              for (int a = 0; a < dim; ++a) {
                                  if (x[a] - b.lo[a] < best) {
                                      best = x[a] - b.lo[a];
                                      best_axis = a;
                                      best_hi = false;
                                  }
                                  if (b.hi[a] - x[a] < best) {
                                      best = b.hi[a] - x[a];
                                      best_axis = a;
                                      best_hi = true;
                                  }
                              }
                              p[best_axis] = best_hi ? b.hi[best_axis] : b.lo[best_axis];
                              return p;
                          },
                          [&](const BallShape& b) { return radial_point(x, b.center, b.radius, dim); },
                          [&](const AnnulusShape& s) {
                              const double r = norm(x, s.center, dim);
                              const double mid = 0.5 * (s.inner + s.outer);
                              return radial_point(x, s.center, r >= mid ? s.outer : s.inner, dim);
                          }},
                      shape);
}

Grid::Grid(ShapeSpec shape, double h) : shape_(std::move(shape)), h_(h) {
    const int dim = shape_.dim;
    if (dim < 1 || dim > kMaxDim) throw GridError("grid dimension must be 1, 2 or 3");
    if (!(h > 0.0) || !std::isfinite(h)) throw GridError("grid spacing must be positive");

    std::visit(overloaded{
                   [&](const BoxShape& b) {
                       for (int a = 0; a < dim; ++a) {
                           if (!(b.hi[a] > b.lo[a])) throw GridError("box must have hi > lo on every axis");
                           origin_[a] = b.lo[a];
                           extents_[a] = static_cast<int>(std::floor((b.hi[a] - b.lo[a]) / h + 0.5)) + 1;
                       }
                   },
                   [&](const BallShape& b) {
                       if (!(b.radius > 0.0)) throw GridError("ball radius must be positive");
                       const int half = static_cast<int>(std::ceil((b.radius + 0.5 * h) / h));
                       for (int a = 0; a < dim; ++a) {
                           origin_[a] = b.center[a] - half * h;
                           extents_[a] = 2 * half + 1;
                       }
                   },
                   [&](const AnnulusShape& s) {
                       if (!(s.outer > s.inner) || s.inner < 0.0) throw GridError("annulus needs 0 <= inner < outer");
                       const int half = static_cast<int>(std::ceil((s.outer + 0.5 * h) / h));
                       for (int a = 0; a < dim; ++a) {
                           origin_[a] = s.center[a] - half * h;
                           extents_[a] = 2 * half + 1;
                       }
                   }},
               shape_.shape);

    std::ptrdiff_t stride = 1;
    for (int a = 0; a < kMaxDim; ++a) {
        strides_[a] = stride;
        stride *= extents_[a];
    }
    const auto total = static_cast<std::size_t>(stride);
    classes_.assign(total, NodeClass::Exterior);

    const double tol = 1e-9 * h;
    for (std::size_t n = 0; n < total; ++n) {
        const double d = shape_.signed_distance(position(n));
        if (d < -(0.5 * h + tol)) {
            classes_[n] = NodeClass::Interior;
        } else if (d <= 0.5 * h + tol) {
            classes_[n] = NodeClass::Boundary;
        }
    }
    for (std::size_t n = 0; n < total; ++n) {
        if (classes_[n] == NodeClass::Interior) {
            for (int a = 0; a < dim; ++a) {
                for (int dir : {-1, 1}) {
                    const auto nb = neighbor(n, a, dir);
                    if (nb < 0 || classes_[static_cast<std::size_t>(nb)] == NodeClass::Exterior) {
                        // Cannot happen for the supported shapes; keeps the invariant explicit.
                        classes_[n] = NodeClass::Boundary;
                    }
                }
            }
        }
    }
    for (std::size_t n = 0; n < total; ++n) {
        if (classes_[n] == NodeClass::Interior) interior_.push_back(n);
        if (classes_[n] == NodeClass::Boundary) boundary_.push_back(n);
    }
    if (interior_.empty()) throw GridError("resolution too coarse: shape has no interior nodes at this spacing");
}

double Grid::cell_volume() const noexcept { return std::pow(h_, dim()); }

std::array<int, kMaxDim> Grid::multi_index(std::size_t node) const noexcept {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < kMaxDim; ++a) {
        idx[a] = static_cast<int>(node % static_cast<std::size_t>(extents_[a]));
        node /= static_cast<std::size_t>(extents_[a]);
    }
    return idx;
}

std::size_t Grid::linear_index(const std::array<int, kMaxDim>& idx) const noexcept {
    std::size_t n = 0;
    for (int a = 0; a < kMaxDim; ++a) n += static_cast<std::size_t>(idx[a]) * static_cast<std::size_t>(strides_[a]);
    return n;
}

bool Grid::in_lattice(const std::array<int, kMaxDim>& idx) const noexcept {
    for (int a = 0; a < kMaxDim; ++a) {
        if (idx[a] < 0 || idx[a] >= extents_[a]) return false;
    }
    return true;
}

Point Grid::position(std::size_t node) const noexcept {
    const auto idx = multi_index(node);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) p[a] = origin_[a] + idx[a] * h_;
    return p;
}

std::int64_t Grid::neighbor(std::size_t node, int axis, int dir) const noexcept {
    auto idx = multi_index(node);
    idx[axis] += dir;
    if (idx[axis] < 0 || idx[axis] >= extents_[axis]) return -1;
    return static_cast<std::int64_t>(node) + dir * strides_[axis];
}

std::size_t Grid::nearest_node(const Point& x) const noexcept {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < dim(); ++a) {
        idx[a] = std::clamp(static_cast<int>(std::lround((x[a] - origin_[a]) / h_)), 0, extents_[a] - 1);
    }
    return linear_index(idx);
}

int Grid::color(std::size_t node) const noexcept {
    const auto idx = multi_index(node);
    return (idx[0] + idx[1] + idx[2]) & 1;
}

GridPtr build_grid(const ShapeSpec& shape, double h) { return std::make_shared<const Grid>(shape, h); }

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)), values_(grid_->size(), fill) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw DomainError("scalar field length does not match grid");
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(GridPtr grid, int m, double fill)
    : grid_(std::move(grid)), m_(m), values_(grid_->size() * static_cast<std::size_t>(m), fill) {
    if (m < 1) throw DomainError("vector field needs m >= 1");
}

VectorField::VectorField(GridPtr grid, int m, std::vector<double> values)
    : grid_(std::move(grid)), m_(m), values_(std::move(values)) {
    if (m < 1) throw DomainError("vector field needs m >= 1");
    if (values_.size() != grid_->size() * static_cast<std::size_t>(m)) {
        throw DomainError("vector field length does not match m * node count");
    }
}

ScalarField VectorField::component(int c) const {
    ScalarField out(grid_);
    for (std::size_t n = 0; n < grid_->size(); ++n) out[n] = (*this)(n, c);
    return out;
}

bool VectorField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace fblab
