#pragma once

#include "fblab/grid.hpp"

namespace fblab {

/// (sum of 2*dim neighbours - 2*dim*centre) / h^2 on Interior nodes, zero elsewhere.
ScalarField laplacian_apply(const ScalarField& f);
ScalarField laplacian_apply(const VectorField& f, int component);

/// Central differences on Interior nodes; dim components per node, zero elsewhere.
VectorField gradient_apply(const ScalarField& f);

/// Central-difference Jacobian on Interior nodes: m*dim values per node,
/// entry (c, a) = d u^c / d x_a stored at c*dim + a.
VectorField jacobian_apply(const VectorField& u);

/// Weight of the lattice edge between two active nodes: 1, or 1/2 when both
/// ends are Boundary nodes (trapezoidal treatment of boundary faces).
double edge_weight(const Grid& grid, std::size_t a, std::size_t b) noexcept;

/// Per-node share of the edge energy: e(x) = 1/2 sum over incident edges
/// w_e |u(y) - u(x)|^2 / h^2. Zero on Exterior nodes.
ScalarField energy_density(const VectorField& u);

/// Discrete Dirichlet energy sum_e w_e |Delta_e u|^2 h^(dim-2), summed over
/// lattice edges with both ends active. Its gradient with respect to an
/// Interior value is exactly -2 h^dim times the discrete Laplacian.
double dirichlet_energy(const VectorField& u);
double dirichlet_energy(const ScalarField& u);

/// Sum of energy_density * h^dim over active nodes with |x - x0| <= r.
/// Throws DomainError when r < h or when the ball contains no active node.
double ball_energy(const VectorField& u, const Point& x0, double r);

/// Same as ball_energy, reusing a precomputed energy_density field.
double ball_energy_from_density(const ScalarField& density, const Point& x0, double r);

}  // namespace fblab
