#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fblab/grid.hpp"
#include "fblab/specialfunc.hpp"

namespace fblab {

/// Half-plane lattice over {0 <= r <= 1 + h, |z| <= 1 + h} for the unit
/// half-disc. Radial nodes sit at r_i = i h; axial nodes are staggered,
/// z_j = (j - nz/2 + 1/2) h, so the lattice is symmetric under z -> -z and no
/// node lies on z = 0. Nodes within h/2 of the arc r^2 + z^2 = 1 are
/// Boundary (Dirichlet), nodes farther inside are Interior.
class AxisymGrid {
public:
    explicit AxisymGrid(double h);

    double spacing() const noexcept { return h_; }
    int nr() const noexcept { return nr_; }
    int nz() const noexcept { return nz_; }
    std::size_t size() const noexcept { return classes_.size(); }
    std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nr_) + static_cast<std::size_t>(i); }
    int i_of(std::size_t n) const noexcept { return static_cast<int>(n % static_cast<std::size_t>(nr_)); }
    int j_of(std::size_t n) const noexcept { return static_cast<int>(n / static_cast<std::size_t>(nr_)); }
    double r(int i) const noexcept { return i * h_; }
    double z(int j) const noexcept { return (j - nz_ / 2 + 0.5) * h_; }
    /// Mirror index under z -> -z.
    int mirror_j(int j) const noexcept { return nz_ - 1 - j; }

    NodeClass node_class(std::size_t n) const noexcept { return classes_[n]; }
    bool active(std::size_t n) const noexcept { return classes_[n] != NodeClass::Exterior; }
    const std::vector<std::size_t>& interior_nodes() const noexcept { return interior_; }

private:
    double h_;
    int nr_;
    int nz_;
    std::vector<NodeClass> classes_;
    std::vector<std::size_t> interior_;
};

using AxisymGridPtr = std::shared_ptr<const AxisymGrid>;

/// (u^r, u^3) per node.
struct AxisymField {
    AxisymGridPtr grid;
    std::vector<double> ur;
    std::vector<double> uz;

    explicit AxisymField(AxisymGridPtr g) : grid(std::move(g)), ur(grid->size(), 0.0), uz(grid->size(), 0.0) {}
    double norm(std::size_t n) const noexcept;
};

/// k-axially symmetric problem with Omega = O = unit ball of R^3. Arc data
/// are u = scale * (r, z) / |(r, z)| at the snapped arc point; the axis column
/// carries u^r = 0.
struct AxisymProblem {
    AxisymGridPtr grid;
    int k = 1;
    double boundary_scale = 1.0;

    AxisymProblem(double h, int k, double boundary_scale = 1.0);
};

/// Samples (u^r, u^3) = f(r, z) on active nodes (axis u^r forced to 0 is the caller's choice).
template <class F>
AxisymField sample_axisym(const AxisymGridPtr& grid, F&& f) {
    AxisymField out(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        const auto v = f(grid->r(grid->i_of(n)), grid->z(grid->j_of(n)));
        out.ur[n] = v[0];
        out.uz[n] = v[1];
    }
    return out;
}

/// Discrete 2 pi sum of r-weighted edge energies plus the k^2 (u^r)^2 / r term.
/// Radial edges carry r_{i+1/2}, axial edges carry r_i (h/8 on the axis), the
/// node term carries h^2 / r_i (absent on the axis). Edges between two
/// Boundary nodes and the node term on Boundary nodes count one half.
double reduced_energy(const AxisymField& u, int k);

struct AxisymSolverConfig {
    /// Step fraction of the per-node stable step.
    double theta = 0.9;
    double tol = 1e-12;
    double update_tol = 1e-9;
    long max_iters = 2'000'000;
    bool track_energy = false;
    bool throw_on_failure = true;
    /// Start from this field instead of the radial blend.
    std::optional<AxisymField> initial;
};

struct AxisymResult {
    AxisymField u;
    long iterations = 0;
    double energy = 0.0;
    double last_max_update = 0.0;
    bool converged = false;
    std::vector<double> energy_history;
};

/// Initial field: arc data blended toward the origin along rays, then
/// pushed radially onto the unit circle where it falls inside.
AxisymField axisym_initial(const AxisymProblem& problem);

/// Jacobi projected gradient on reduced_energy with a per-node step and the
/// radial projection (u^r, u^3) <- (u^r, u^3) / rho when rho < 1. The step is
/// halved whenever the energy would rise. The update is symmetric under
/// z -> -z, so symmetric data give bitwise symmetric iterates.
AxisymResult solve_axisym(const AxisymProblem& problem, const AxisymSolverConfig& cfg = {});

/// Contact: |u| <= 1 + tol.
std::vector<std::uint8_t> axisym_contact_mask(const AxisymField& u, double tol = 1e-9);

struct AxisFace {
    std::size_t contact_node = 0;
    std::size_t free_node = 0;
    double r = 0.0;
    double z = 0.0;
};

/// Edges between contact and non-contact active nodes (at least one Interior).
std::vector<AxisFace> axisym_free_boundary(const AxisymField& u, std::span<const std::uint8_t> contact);

struct AxisNodeReport {
    std::size_t node = 0;
    double z = 0.0;
    double norm_minus_one = 0.0;
    /// Central differences of the lifted Cartesian map across the axis:
    /// d/dx and d/dy of the horizontal components reduce to
    /// u^r(h) (1 - (-1)^k) / 2h and u^r(h) sin(k pi / 2) / h; d/dx, d/dy of u^3
    /// vanish by symmetry and d/dz u^3 is the axial central difference.
    double dx_u1 = 0.0;
    double dy_u2 = 0.0;
    double dz_u3 = 0.0;
    /// One-sided quotient u^r(h) / h (informational; O(h) when u^r ~ r^2).
    double radial_quotient = 0.0;
    double max_partial = 0.0;
    bool contact = false;
    /// Contact node with a non-contact neighbour.
    bool free_boundary = false;
    /// Only meaningful on free-boundary nodes.
    bool branch = false;
};

/// Every Interior axis node. branch_tol <= 0 selects 3h.
std::vector<AxisNodeReport> axis_branch_check(const AxisymField& u, int k, double branch_tol = -1.0,
                                              double contact_tol = 1e-9);

struct ConeFitReport {
    double vertex_z = 0.0;
    /// Half-angle between the fitted line and the axis, in [0, pi/2].
    double phi = 0.0;
    double cos_phi = 0.0;
    double nearest_zero = 0.0;
    double zero_gap = 0.0;
    /// RMS distance of the face midpoints from the fitted line.
    double residual = 0.0;
    std::size_t samples = 0;
    bool axis_hugging = false;
};

/// Total least-squares line through (0, vertex_z) over free-boundary face
/// midpoints at distance [r_lo, r_hi] from the vertex (defaults 4h, 16h).
/// The nearest zero is taken from P_{2k-1}. Throws DomainError when the
/// window holds no faces.
ConeFitReport cone_fit(const std::vector<AxisFace>& faces, double h, double vertex_z, int k, double r_lo = -1.0,
                       double r_hi = -1.0);

/// u^r e_r(k theta) + u^3 e_3 sampled on a 3D grid by bilinear interpolation in (r, z).
VectorField lift(const AxisymField& u, int k, const GridPtr& grid3);

}  // namespace fblab
