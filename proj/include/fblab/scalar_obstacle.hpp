#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fblab/grid.hpp"

namespace fblab {

/// Minimise the Dirichlet energy over {v >= psi, v = g on the boundary}.
class ScalarObstacleProblem {
public:
    /// g is read on Boundary nodes only. Throws InvalidProblem when g < psi on
    /// some Boundary node (empty admissible set) or when fields are not finite.
    ScalarObstacleProblem(ScalarField psi, ScalarField g);

    const GridPtr& grid() const noexcept { return psi_.grid(); }
    const ScalarField& psi() const noexcept { return psi_; }
    const ScalarField& g() const noexcept { return g_; }

    /// Discrete Laplacian of psi is negative on every Interior node.
    bool superharmonic() const noexcept { return superharmonic_; }

    /// Same obstacle with boundary data g + shift.
    ScalarObstacleProblem shifted(double shift) const;

private:
    ScalarField psi_;
    ScalarField g_;
    bool superharmonic_ = false;
};

struct PsorConfig {
    double omega = 1.8;
    /// Stop once lcp_residual <= tol.
    double tol = 1e-6;
    long max_iters = 2'000'000;
    /// Record dirichlet_energy after every sweep (debug runs).
    bool track_energy = false;
};

struct PsorResult {
    ScalarField u;
    long iterations = 0;
    double residual = 0.0;
    std::vector<double> energy_history;
};

/// Projected successive over-relaxation with lexicographic red-black ordering:
/// each node takes the over-relaxed Gauss-Seidel value and is then clipped
/// to max(value, psi). Same-colour nodes are updated in parallel.
/// Throws ConvergenceError carrying the last residual after max_iters sweeps.
PsorResult solve_psor(const ScalarObstacleProblem& problem, const PsorConfig& cfg = {},
                      const std::optional<ScalarField>& initial = std::nullopt);

/// max over Interior nodes of |min(-Lap_h u, u - psi)| divided by max(1, |psi|_inf).
double lcp_residual(const ScalarField& u, const ScalarObstacleProblem& problem);

enum class FreeBoundaryClass { Regular, Singular, Indeterminate };

const char* to_string(FreeBoundaryClass c);

/// Density cutoffs applied at the two finest radii.
struct DensityThresholds {
    double regular_lo = 0.35;
    double regular_hi = 0.65;
    double singular_max = 0.15;
    /// Largest sampling radius in units of h (radii are 4h, 8h, ... up to this).
    double max_radius_h = 32.0;
};

/// Lattice edge between a contact node and a non-contact node.
struct FreeBoundaryFace {
    std::size_t contact_node = 0;
    std::size_t free_node = 0;
    Point midpoint{};
};

struct FreeBoundarySample {
    std::size_t node = 0;
    std::vector<double> radii;
    std::vector<double> density;
    FreeBoundaryClass cls = FreeBoundaryClass::Indeterminate;
};

/// Contact set, free boundary and per-point contact densities.
///
/// The density at x0 is the contact measure of B_r(x0) over the number of
/// active nodes in B_r(x0). A contact node carries weight 1, or 1/2 when it
/// has a non-contact active neighbour (its dual cell is split by the free
/// boundary). Radii are dyadic multiples of 4h.
struct ContactReport {
    GridPtr grid;
    std::vector<std::uint8_t> contact;  // per node, active nodes only
    std::vector<FreeBoundaryFace> faces;
    std::vector<std::size_t> free_boundary_nodes;  // contact nodes touching a free face
    std::vector<FreeBoundarySample> samples;

    std::size_t count(FreeBoundaryClass c) const noexcept;
};

/// Builds faces and free-boundary nodes from a contact mask; samples are
/// filled for every free-boundary node when classify is true.
ContactReport contact_report_from_mask(GridPtr grid, std::vector<std::uint8_t> contact,
                                       const DensityThresholds& thresholds = {}, bool classify = true);

/// Contact mask u - psi <= contact_tol on active nodes. A negative
/// contact_tol selects 10 * machine epsilon * max(1, |psi|_inf).
ContactReport extract_contact(const ScalarField& u, const ScalarObstacleProblem& problem,
                              const DensityThresholds& thresholds = {}, double contact_tol = -1.0);

/// Contact density at node over radii 4h * 2^j <= max_radius_h * h.
FreeBoundarySample sample_density(const ContactReport& report, std::size_t node, const DensityThresholds& thresholds);

/// Regular / Singular / Indeterminate from the two finest densities.
/// Throws DomainError when node is not a free-boundary node.
FreeBoundaryClass classify_free_boundary_point(const ContactReport& report, std::size_t node,
                                               const DensityThresholds& thresholds = {});

/// Number of 2*dim-connected components of the contact set.
int contact_components(const ContactReport& report);

struct PerturbationRun {
    double t = 0.0;
    std::size_t free_boundary_points = 0;
    std::size_t regular = 0;
    std::size_t singular = 0;
    std::size_t indeterminate = 0;
    int components = 0;
    std::vector<std::size_t> singular_nodes;
};

/// Solves with boundary data g + t for every t and classifies every
/// free-boundary point. Solver failures propagate.
std::vector<PerturbationRun> schaeffer_perturbation_experiment(const ScalarObstacleProblem& problem,
                                                               std::span<const double> t_list,
                                                               const PsorConfig& cfg = {},
                                                               const DensityThresholds& thresholds = {});

/// Two-peak obstacle psi = 1 - c (x^2 - a^2)^2 - b y^2 on [-1, 1]^2 (superharmonic
/// for b > 2 c a^2) whose contact set is a dumbbell. The boundary shift is
/// calibrated by bisection to the last value at which the two contact lobes
/// are still joined, so the neck has pinched to a thin bridge at t = 0.
struct PinchFixture {
    ScalarObstacleProblem problem;
    double calibrated_shift = 0.0;
};

PinchFixture two_lobe_pinch_fixture(double h, const PsorConfig& cfg = {}, double a = 0.4, double c = 4.0,
                                    double b = 4.0);

}  // namespace fblab
