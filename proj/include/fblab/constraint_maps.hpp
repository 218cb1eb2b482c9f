#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fblab/convex_body.hpp"
#include "fblab/grid.hpp"

namespace fblab {

/// Boundary datum g : R^dim -> R^m, writes m components.
using MapFunction = std::function<void(const Point&, std::span<double>)>;

/// Minimise the Dirichlet energy over maps u : Omega -> R^m \ int(O) with u = g
/// on the boundary.
class ConstraintMapProblem {
public:
    /// g is sampled at the snapped boundary position of every Boundary node
    /// and kept for the initialisation. Throws InvalidProblem when some sampled
    /// value lies inside O by more than 1e-8.
    ConstraintMapProblem(GridPtr grid, ConvexBody body, int m, MapFunction g);

    /// Boundary values given directly (read on Boundary nodes only).
    ConstraintMapProblem(ConvexBody body, VectorField boundary_values);

    const GridPtr& grid() const noexcept { return boundary_.grid(); }
    const ConvexBody& body() const noexcept { return body_; }
    int m() const noexcept { return boundary_.components(); }
    const VectorField& boundary_values() const noexcept { return boundary_; }

    /// g at the boundary point nearest x: the analytic datum when available,
    /// otherwise the value at the closest Boundary node.
    void boundary_value_near(const Point& x, std::span<double> out) const;

private:
    void validate() const;

    ConvexBody body_;
    VectorField boundary_;
    MapFunction g_;
};

enum class MapScheme {
    /// Red-black nonlinear SOR with projection and a guaranteed-descent fallback.
    RedBlackSor,
    /// Jacobi projected gradient with backtracking on the energy.
    ProjectedGradient,
};

enum class MapInit {
    /// project_out(t g(x_b) + (1 - t) c_O) with t = 1 - dist(x, boundary) / max dist.
    RadialBlend,
    /// Start from ConstraintSolverConfig::initial (projected onto the constraint).
    Given,
};

struct ConstraintSolverConfig {
    MapScheme scheme = MapScheme::RedBlackSor;
    MapInit init = MapInit::RadialBlend;
    std::optional<VectorField> initial;
    double omega = 1.9;
    /// Projected gradient: initial step; <= 0 selects h^2 / 8.
    double tau0 = -1.0;
    /// Stop when the relative energy decrease over a sweep is below tol ...
    double tol = 1e-8;
    /// ... and the largest nodal update is below update_tol.
    double update_tol = 1e-6;
    long max_iters = 200'000;
    /// Record the energy after every sweep.
    bool track_energy = false;
    /// Throw ConvergenceError when max_iters is reached; otherwise return
    /// with converged = false.
    bool throw_on_failure = true;
};

struct ConstraintSolveResult {
    VectorField u;
    long iterations = 0;
    double energy = 0.0;
    double last_relative_decrease = 0.0;
    double last_max_update = 0.0;
    /// Projections that hit a medial-axis tie (deterministic choice made).
    long tie_breaks = 0;
    bool converged = false;
    std::vector<double> energy_history;
};

/// Feasible initial map for the declared initialisation.
VectorField initial_map(const ConstraintMapProblem& problem, const ConstraintSolverConfig& cfg = {});

/// Descent solver; every iterate is feasible and the energy never increases.
ConstraintSolveResult solve_projected_gradient(const ConstraintMapProblem& problem, const ConstraintSolverConfig& cfg = {});

/// Nodes whose value lies on the obstacle boundary (signed distance <= tol).
std::vector<std::uint8_t> map_contact_mask(const VectorField& u, const ConvexBody& body, double tol = 1e-9);

/// Per Interior node |Lap_h u - A_u(Du, Du) chi_contact|; A = -|Du|^2 (u - c) / R^2
/// for a Ball and -F(u) nu otherwise. Nodes within exclude_radius of a point
/// in exclude are set to zero.
ScalarField el_residual(const VectorField& u, const ConstraintMapProblem& problem, std::span<const Point> exclude = {},
                        double exclude_radius = 0.0, double contact_tol = 1e-9);

/// u_k(z) = (Re z^2, Im z^2, Re z^k) with z = x + i y; m = 3 on a 2D grid.
VectorField fixture_uk(int k, const GridPtr& grid);

/// (x - center) / |x - center| with m = dim; the centre itself maps to e_1.
VectorField fixture_hedgehog(const GridPtr& grid, const Point& center = {});

/// Radial free-boundary radius rho of the ball-in-ball problem with Omega = B_R0,
/// O = B_1 in R^3 and g = id: the root in (0, 1) of rho^3 - 3 R0^3 rho + 2 R0^3 = 0
/// (rho^3 - 24 rho + 16 = 0 for R0 = 2). Solved by bisection.
double radial_free_boundary_radius(double outer_radius = 2.0);

/// Exact radial profile f(rho) of that problem (1 on the contact ball,
/// A rho + B / rho^2 outside).
double radial_profile(double rho, double outer_radius = 2.0);

}  // namespace fblab
