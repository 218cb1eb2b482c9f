#include "fblab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fblab/error.hpp"
#include "fblab/operators.hpp"

namespace fblab {

namespace {

Vec to_vec(std::span<const double> v) {
    Vec out{0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c];
    return out;
}

/// Lattice offsets inside the ball of radius rh (in units of h).
std::vector<std::array<int, kMaxDim>> ball_offsets(int dim, double rh) {
    std::vector<std::array<int, kMaxDim>> out;
    const int reach = static_cast<int>(std::floor(rh + 1e-9));
    const int r1 = dim > 1 ? reach : 0;
    const int r2 = dim > 2 ? reach : 0;
    for (int k = -r2; k <= r2; ++k) {
        for (int j = -r1; j <= r1; ++j) {
            for (int i = -reach; i <= reach; ++i) {
                if (i * i + j * j + k * k <= rh * rh + 1e-9) out.push_back({i, j, k});
            }
        }
    }
    return out;
}

/// Whether the closed ball B_r(x0) lies inside the lattice box (so no
/// active node of Omega is cut off by the lattice).
bool ball_inside_domain(const Grid& g, const Point& x0, double r) {
    return g.shape().signed_distance(x0) <= -r + 0.5 * g.spacing();
}

}  // namespace

MonotonicityReport rescaled_energy_from_density(const ScalarField& density, const Point& x0, std::span<const double> radii,
                                                double slack) {
    const Grid& g = *density.grid();
    const double h = g.spacing();
    MonotonicityReport rep;
    rep.x0 = x0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] < 2.0 * h * (1.0 - 1e-12)) throw DomainError("radii must be at least 2h");
        if (i > 0 && radii[i] < radii[i - 1]) throw DomainError("radii must be sorted");
    }
    for (double r : radii) {
        if (!ball_inside_domain(g, x0, r)) {
            rep.warnings.push_back("radius " + std::to_string(r) + " leaves the domain; truncated");
            break;
        }
        const double e = std::pow(r, 2.0 - g.dim()) * ball_energy_from_density(density, x0, r);
        rep.radii.push_back(r);
        rep.energies.push_back(e);
    }
    for (std::size_t i = 1; i < rep.energies.size(); ++i) {
        if (rep.energies[i] < (1.0 - slack) * rep.energies[i - 1]) rep.violations.push_back(i);
    }
    rep.monotone = rep.violations.empty();
    return rep;
}

MonotonicityReport rescaled_energy(const VectorField& u, const Point& x0, std::span<const double> radii, double slack) {
    return rescaled_energy_from_density(energy_density(u), x0, radii, slack);
}

SingularityReport detect_discontinuities(const VectorField& u, double eps, const ConvexBody* body, double flat_tol) {
    const Grid& g = *u.grid();
    const int dim = g.dim();
    const double h = g.spacing();
    const ScalarField density = energy_density(u);
    const auto offsets = ball_offsets(dim, 4.0);
    const double scale = std::pow(4.0 * h, 2.0 - dim) * g.cell_volume();

    SingularityReport rep;
    std::vector<std::size_t> flagged;
    std::vector<double> flagged_energy;
    for (std::size_t n : g.interior_nodes()) {
        const auto c = g.multi_index(n);
        double sum = 0.0;
        for (const auto& o : offsets) {
            const std::array<int, kMaxDim> idx{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
            if (!g.in_lattice(idx)) continue;
            const std::size_t j = g.linear_index(idx);
            if (g.active(j)) sum += density[j];
        }
        const double e = sum * scale;
        if (e > eps) {
            flagged.push_back(n);
            flagged_energy.push_back(e);
        }
    }
    rep.flagged_nodes = flagged.size();

    for (std::size_t f = 0; f < flagged.size(); ++f) {
        const std::size_t n = flagged[f];
        const auto c = g.multi_index(n);
        bool is_max = true;
        std::array<int, kMaxDim> o{0, 0, 0};
        const int r1 = dim > 1 ? 1 : 0, r2 = dim > 2 ? 1 : 0;
        for (o[2] = -r2; o[2] <= r2 && is_max; ++o[2]) {
            for (o[1] = -r1; o[1] <= r1 && is_max; ++o[1]) {
                for (o[0] = -1; o[0] <= 1; ++o[0]) {
                    if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
                    const std::array<int, kMaxDim> idx{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
                    if (!g.in_lattice(idx)) continue;
                    const std::size_t j = g.linear_index(idx);
                    if (!g.active(j)) continue;
                    if (density[j] > density[n] * (1.0 + 1e-6)) {
                        is_max = false;
                        break;
                    }
                }
            }
        }
        if (!is_max) continue;
        SingularityCandidate cand;
        cand.node = n;
        cand.position = g.position(n);
        cand.energy = flagged_energy[f];
        for (double rh = 4.0;; rh *= 2.0) {
            const double r = rh * h;
            if (!ball_inside_domain(g, cand.position, r)) break;
            cand.radii.push_back(r);
            cand.profile.push_back(std::pow(r, 2.0 - dim) * ball_energy_from_density(density, cand.position, r));
        }
        if (body) cand.flat_hit = body->flat_witness(to_vec(u.at(n)), flat_tol);
        rep.discontinuities.push_back(std::move(cand));
    }
    return rep;
}

std::vector<std::size_t> detect_branch_points(const VectorField& u, double branch_tol, std::span<const std::uint8_t> contact) {
    const Grid& g = *u.grid();
    const VectorField jac = jacobian_apply(u);
    std::vector<std::size_t> out;
    for (std::size_t n : g.interior_nodes()) {
        if (!contact.empty() && !contact[n]) continue;
        double mx = 0.0;
        for (double v : jac.at(n)) mx = std::max(mx, std::abs(v));
        if (mx <= branch_tol) out.push_back(n);
    }
    return out;
}

DistanceReport distance_diagnostics(const VectorField& u, const ConvexBody& body) {
    const GridPtr& gp = u.grid();
    const Grid& g = *gp;
    const int m = u.components();
    DistanceReport rep;
    rep.d = ScalarField(gp);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.active(n)) rep.d[n] = std::max(0.0, body.signed_distance(to_vec(u.at(n))));
    }
    const ScalarField lap = laplacian_apply(rep.d);
    rep.defect = ScalarField(gp);
    for (std::size_t n : g.interior_nodes()) rep.defect[n] = std::min(lap[n], 0.0);
    for (int s : {1, 2, 4, 8}) {
        ModulusRow row;
        row.step = s;
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (!g.active(n)) continue;
            const auto c = g.multi_index(n);
            for (int a = 0; a < g.dim(); ++a) {
                auto idx = c;
                idx[a] += s;
                if (!g.in_lattice(idx)) continue;
                const std::size_t j = g.linear_index(idx);
                if (!g.active(j)) continue;
                row.omega_d = std::max(row.omega_d, std::abs(rep.d[j] - rep.d[n]));
                double du2 = 0.0;
                for (int k = 0; k < m; ++k) du2 += (u(j, k) - u(n, k)) * (u(j, k) - u(n, k));
                row.omega_u = std::max(row.omega_u, std::sqrt(du2));
            }
        }
        rep.modulus.push_back(row);
    }
    return rep;
}

double local_oscillation(const ScalarField& f, const Point& center, double radius) {
    const Grid& g = *f.grid();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        const Point p = g.position(n);
        double d2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) d2 += (p[a] - center[a]) * (p[a] - center[a]);
        if (d2 > radius * radius * (1.0 + 1e-12)) continue;
        lo = std::min(lo, f[n]);
        hi = std::max(hi, f[n]);
    }
    return hi >= lo ? hi - lo : 0.0;
}

double local_jump(const VectorField& u, const Point& center, double radius) {
    const Grid& g = *u.grid();
    double best = 0.0;
    auto inside = [&](std::size_t n) {
        const Point p = g.position(n);
        double d2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) d2 += (p[a] - center[a]) * (p[a] - center[a]);
        return d2 <= radius * radius * (1.0 + 1e-12);
    };
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n) || !inside(n)) continue;
        for (int a = 0; a < g.dim(); ++a) {
            const auto nb = g.neighbor(n, a, +1);
            if (nb < 0) continue;
            const auto j = static_cast<std::size_t>(nb);
            if (!g.active(j) || !inside(j)) continue;
            double d2 = 0.0;
            for (int k = 0; k < u.components(); ++k) d2 += (u(j, k) - u(n, k)) * (u(j, k) - u(n, k));
            best = std::max(best, std::sqrt(d2));
        }
    }
    return best;
}

double antipodal_jump(const VectorField& u, const Point& center, double radius) {
    const Grid& g = *u.grid();
    const int m = u.components();
    auto direction = [&](std::size_t n, std::vector<double>& out) {
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += u(n, k) * u(n, k);
        s = std::sqrt(s);
        for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] = s > 0.0 ? u(n, k) / s : 0.0;
        return s > 0.0;
    };
    std::vector<double> p(static_cast<std::size_t>(m)), q(static_cast<std::size_t>(m));
    double best = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        const Point x = g.position(n);
        Point mirror{};
        double d2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            d2 += (x[a] - center[a]) * (x[a] - center[a]);
            mirror[a] = 2.0 * center[a] - x[a];
        }
        if (d2 == 0.0 || d2 > radius * radius * (1.0 + 1e-12)) continue;
        const std::size_t j = g.nearest_node(mirror);
        if (!g.active(j)) continue;
        double e2 = 0.0;
        const Point y = g.position(j);
        for (int a = 0; a < g.dim(); ++a) e2 += (y[a] - mirror[a]) * (y[a] - mirror[a]);
        if (e2 > 1e-6 * g.spacing() * g.spacing()) continue;
        if (!direction(n, p) || !direction(j, q)) continue;
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += (p[static_cast<std::size_t>(k)] - q[static_cast<std::size_t>(k)]) * (p[static_cast<std::size_t>(k)] - q[static_cast<std::size_t>(k)]);
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

ScalarField degeneracy_field(const VectorField& u, const ConvexBody& body) {
    const GridPtr& gp = u.grid();
    const Grid& g = *gp;
    const VectorField jac = jacobian_apply(u);
    ScalarField out(gp);
    for (std::size_t n : g.interior_nodes()) {
        Vec y = to_vec(u.at(n));
        if (body.signed_distance(y) < 0.0) y = body.project_out(y).point;
        out[n] = body.distance_hessian_quadform(y, jac.at(n), g.dim());
    }
    return out;
}

ContactReport map_contact_report(const VectorField& u, const ConvexBody& body, double tol) {
    return contact_report_from_mask(u.grid(), map_contact_mask(u, body, tol), {}, false);
}

double distance_to_free_boundary(const ContactReport& report, const Point& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : report.faces) {
        double d2 = 0.0;
        for (int a = 0; a < kMaxDim; ++a) d2 += (f.midpoint[a] - x[a]) * (f.midpoint[a] - x[a]);
        best = std::min(best, d2);
    }
    return std::sqrt(best);
}

FlatPieceReport flat_piece_experiment(const FlatPieceConfig& cfg) {
    if (cfg.body.dim() != 3) throw InvalidProblem("flat piece experiment needs a body in R^3");
    if (!(cfg.domain_radius > 0.0) || !(cfg.h > 0.0)) throw InvalidProblem("domain radius and h must be positive");
    const GridPtr grid = build_grid(ShapeSpec::ball(3, {0.0, 0.0, 0.0}, cfg.domain_radius), cfg.h);
    const ConstraintMapProblem problem(grid, cfg.body, 3, [](const Point& x, std::span<double> out) {
        for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
    });
    FlatPieceReport rep;
    rep.solution = solve_projected_gradient(problem, cfg.solver);
    rep.singularities = detect_discontinuities(rep.solution.u, cfg.eps, &problem.body(), cfg.flat_tol);
    rep.contact = map_contact_report(rep.solution.u, problem.body(), cfg.contact_tol);
    rep.min_distance_h = std::numeric_limits<double>::infinity();
    for (const auto& c : rep.singularities.discontinuities) {
        const double d = distance_to_free_boundary(rep.contact, c.position) / cfg.h;
        rep.candidate_distance_h.push_back(d);
        rep.min_distance_h = std::min(rep.min_distance_h, d);
        if (d <= 2.0 + 1e-9) {
            rep.near_free_boundary = true;
            if (c.flat_hit) rep.image_on_flat = true;
        }
        if (d <= 4.0 + 1e-9) ++rep.within_4h;
    }
    return rep;
}

}  // namespace fblab
