#pragma once

#include <string>
#include <vector>

#include "fblab/constraint_maps.hpp"
#include "fblab/scalar_obstacle.hpp"

namespace fblab {

/// Rescaled energies E(u, x0, r) = r^(2 - dim) ball_energy(u, x0, r).
struct MonotonicityReport {
    Point x0{};
    std::vector<double> radii;
    std::vector<double> energies;
    /// Indices i with E[i] < (1 - slack) E[i - 1].
    std::vector<std::size_t> violations;
    bool monotone = true;
    std::vector<std::string> warnings;
};

/// Radii must be sorted and >= 2h. Radii whose ball leaves Omega are dropped
/// with a warning. Throws DomainError on unsorted or too small radii.
MonotonicityReport rescaled_energy(const VectorField& u, const Point& x0, std::span<const double> radii,
                                   double slack = 0.05);

/// Same, reusing a precomputed energy_density field.
MonotonicityReport rescaled_energy_from_density(const ScalarField& density, const Point& x0,
                                                std::span<const double> radii, double slack = 0.05);

struct SingularityCandidate {
    std::size_t node = 0;
    Point position{};
    /// E(u, x0, 4h).
    double energy = 0.0;
    /// Profile over 4h, 8h, ... while the ball stays in Omega.
    std::vector<double> radii;
    std::vector<double> profile;
    /// Image lies on a flat piece of O (only filled when a body is supplied).
    bool flat_hit = false;
};

struct SingularityReport {
    std::vector<SingularityCandidate> discontinuities;
    std::vector<std::size_t> branch_points;
    /// Interior nodes with E(u, x0, 4h) > eps.
    std::size_t flagged_nodes = 0;
};

/// Nodes with E(u, x0, 4h) > eps that are local maxima of the energy density
/// among their 3^dim - 1 lattice neighbours (ties within 1e-6 relative kept).
/// A singularity between nodes therefore yields the surrounding node ring.
SingularityReport detect_discontinuities(const VectorField& u, double eps = 1.0, const ConvexBody* body = nullptr,
                                         double flat_tol = 1e-3);

/// Contact nodes (or every Interior node when contact is empty) where every
/// partial derivative has magnitude <= branch_tol.
std::vector<std::size_t> detect_branch_points(const VectorField& u, double branch_tol,
                                              std::span<const std::uint8_t> contact = {});

struct ModulusRow {
    int step = 0;          // lattice steps
    double omega_d = 0.0;  // max |d(x + s e_a) - d(x)|
    double omega_u = 0.0;  // max |u(x + s e_a) - u(x)|
};

struct DistanceReport {
    ScalarField d;       // max(signed_distance(u), 0)
    ScalarField defect;  // min(Lap_h d, 0) on Interior nodes
    std::vector<ModulusRow> modulus;
};

DistanceReport distance_diagnostics(const VectorField& u, const ConvexBody& body);

/// max - min of f over active nodes within radius of center.
double local_oscillation(const ScalarField& f, const Point& center, double radius);

/// Largest |u(x) - u(y)| over lattice-adjacent active pairs within radius of center.
double local_jump(const VectorField& u, const Point& center, double radius);

/// Largest |u(x)/|u(x)| - u(y)/|u(y)|| over node pairs x, y = 2 center - x
/// (both active lattice nodes) with 0 < |x - center| <= radius. Equals 2 for
/// x/|x| about its singular point.
double antipodal_jump(const VectorField& u, const Point& center, double radius);

/// F(u)(x) = Hess dist(., O)_{u(x)}[Du, Du] on Interior nodes (zero elsewhere).
/// Nodes whose value is inside O by round-off are evaluated at the projection.
ScalarField degeneracy_field(const VectorField& u, const ConvexBody& body);

/// Contact report of a map (contact: signed_distance(u) <= tol), without
/// density classification.
ContactReport map_contact_report(const VectorField& u, const ConvexBody& body, double tol = 1e-9);

/// Distance from x to the nearest free-boundary face midpoint (infinity if none).
double distance_to_free_boundary(const ContactReport& report, const Point& x);

struct FlatPieceConfig {
    ConvexBody body = ConvexBody::slab_capped_ball(3, {0.0, 0.0, 0.0}, 1.0, 0.5);
    double domain_radius = 2.0;
    double h = 1.0 / 32.0;
    ConstraintSolverConfig solver{};
    double eps = 1.0;
    double flat_tol = 1e-3;
    double contact_tol = 1e-9;
};

struct FlatPieceReport {
    ConstraintSolveResult solution;
    SingularityReport singularities;
    ContactReport contact;
    /// Distance of each discontinuity candidate to the free boundary, in units of h.
    std::vector<double> candidate_distance_h;
    /// Smallest of those (infinity without candidates).
    double min_distance_h = 0.0;
    /// (a) some candidate within 2h of the free boundary.
    bool near_free_boundary = false;
    /// (b) such a candidate also maps onto a flat piece.
    bool image_on_flat = false;
    /// Candidates within 4h of the free boundary.
    std::size_t within_4h = 0;
};

/// Omega = B_R in R^3, g = id, obstacle from cfg; solve and report.
FlatPieceReport flat_piece_experiment(const FlatPieceConfig& cfg);

}  // namespace fblab
