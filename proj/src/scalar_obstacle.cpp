#include "fblab/scalar_obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fblab/error.hpp"
#include "fblab/operators.hpp"
#include "fblab/parallel.hpp"

namespace fblab {

namespace {

double sup_norm(std::span<const double> v, const Grid& g) {
    double s = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) {
        if (g.active(n)) s = std::max(s, std::abs(v[n]));
    }
    return s;
}

std::array<std::vector<std::size_t>, 2> split_colors(const Grid& g) {
    std::array<std::vector<std::size_t>, 2> out;
    for (std::size_t n : g.interior_nodes()) out[static_cast<std::size_t>(g.color(n))].push_back(n);
    return out;
}

}  // namespace

ScalarObstacleProblem::ScalarObstacleProblem(ScalarField psi, ScalarField g) : psi_(std::move(psi)), g_(std::move(g)) {
    if (!psi_.grid() || psi_.grid() != g_.grid()) throw InvalidProblem("psi and g must live on the same grid");
    const Grid& grid = *psi_.grid();
    for (std::size_t n : grid.boundary_nodes()) {
        if (!std::isfinite(g_[n]) || !std::isfinite(psi_[n])) throw InvalidProblem("boundary data must be finite");
        if (g_[n] < psi_[n]) throw InvalidProblem("boundary data lies below the obstacle: admissible set is empty");
    }
    for (std::size_t n : grid.interior_nodes()) {
        if (!std::isfinite(psi_[n])) throw InvalidProblem("obstacle must be finite");
    }
    const ScalarField lap = laplacian_apply(psi_);
    superharmonic_ = std::all_of(grid.interior_nodes().begin(), grid.interior_nodes().end(),
                                 [&](std::size_t n) { return lap[n] < 0.0; });
}

ScalarObstacleProblem ScalarObstacleProblem::shifted(double shift) const {
    ScalarField g = g_;
    for (std::size_t n : grid()->boundary_nodes()) g[n] += shift;
    return ScalarObstacleProblem(psi_, std::move(g));
}

double lcp_residual(const ScalarField& u, const ScalarObstacleProblem& problem) {
    const Grid& g = *problem.grid();
    const ScalarField lap = laplacian_apply(u);
    double worst = 0.0;
    for (std::size_t n : g.interior_nodes()) {
        worst = std::max(worst, std::abs(std::min(-lap[n], u[n] - problem.psi()[n])));
    }
    return worst / std::max(1.0, sup_norm(problem.psi().values(), g));
}

PsorResult solve_psor(const ScalarObstacleProblem& problem, const PsorConfig& cfg, const std::optional<ScalarField>& initial) {
    if (!(cfg.omega > 0.0 && cfg.omega < 2.0)) throw DomainError("relaxation factor must lie in (0, 2)");
    if (cfg.max_iters < 1) throw DomainError("max_iters must be >= 1");
    const GridPtr& gp = problem.grid();
    const Grid& g = *gp;
    const auto& psi = problem.psi();

    PsorResult result;
    if (initial) {
        result.u = *initial;
    } else {
        result.u = ScalarField(gp);
        for (std::size_t n : g.interior_nodes()) result.u[n] = psi[n];
    }
    for (std::size_t n : g.boundary_nodes()) result.u[n] = problem.g()[n];
    for (std::size_t n : g.interior_nodes()) result.u[n] = std::max(result.u[n], psi[n]);

    const auto colors = split_colors(g);
    const int dim = g.dim();
    std::array<std::size_t, kMaxDim> strides{};
    for (int a = 0; a < dim; ++a) strides[a] = static_cast<std::size_t>(g.stride(a));
    const double inv_deg = 1.0 / (2.0 * dim);
    const double omega = cfg.omega;
    double* u = result.u.values().data();

    if (cfg.track_energy) result.energy_history.push_back(dirichlet_energy(result.u));
    for (long it = 1; it <= cfg.max_iters; ++it) {
        for (const auto& nodes : colors) {
            parallel_for(nodes.size(), [&](std::size_t begin, std::size_t end) {
                for (std::size_t k = begin; k < end; ++k) {
                    const std::size_t n = nodes[k];
                    double sum = 0.0;
                    for (int a = 0; a < dim; ++a) sum += u[n - strides[a]] + u[n + strides[a]];
                    const double relaxed = u[n] + omega * (sum * inv_deg - u[n]);
                    u[n] = std::max(relaxed, psi[n]);
                }
            });
        }
        if (cfg.track_energy) result.energy_history.push_back(dirichlet_energy(result.u));
        result.residual = lcp_residual(result.u, problem);
        result.iterations = it;
        if (result.residual <= cfg.tol) return result;
    }
    throw ConvergenceError("PSOR did not reach the residual tolerance", result.residual, result.iterations);
}

const char* to_string(FreeBoundaryClass c) {
    switch (c) {
        case FreeBoundaryClass::Regular: return "regular";
        case FreeBoundaryClass::Singular: return "singular";
        case FreeBoundaryClass::Indeterminate: return "indeterminate";
    }
    return "unknown";
}

std::size_t ContactReport::count(FreeBoundaryClass c) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [c](const FreeBoundarySample& s) { return s.cls == c; }));
}

ContactReport contact_report_from_mask(GridPtr grid, std::vector<std::uint8_t> contact, const DensityThresholds& thresholds,
                                       bool classify) {
    const Grid& g = *grid;
    if (contact.size() != g.size()) throw DomainError("contact mask length does not match grid");
    ContactReport report;
    report.grid = grid;
    report.contact = std::move(contact);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) report.contact[n] = 0;
    }
    std::vector<std::uint8_t> on_free(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        for (int a = 0; a < g.dim(); ++a) {
            const auto nb = g.neighbor(n, a, +1);
            if (nb < 0) continue;
            const auto j = static_cast<std::size_t>(nb);
            if (!g.active(j) || report.contact[n] == report.contact[j]) continue;
            if (g.node_class(n) != NodeClass::Interior && g.node_class(j) != NodeClass::Interior) continue;
            const std::size_t c = report.contact[n] ? n : j;
            const std::size_t f = report.contact[n] ? j : n;
            const Point pc = g.position(c), pf = g.position(f);
            Point mid{};
            for (int k = 0; k < kMaxDim; ++k) mid[k] = 0.5 * (pc[k] + pf[k]);
            report.faces.push_back({c, f, mid});
            on_free[c] = 1;
        }
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (on_free[n] && g.node_class(n) == NodeClass::Interior) report.free_boundary_nodes.push_back(n);
    }
    if (classify) {
        for (std::size_t n : report.free_boundary_nodes) report.samples.push_back(sample_density(report, n, thresholds));
    }
    return report;
}

ContactReport extract_contact(const ScalarField& u, const ScalarObstacleProblem& problem, const DensityThresholds& thresholds,
                              double contact_tol) {
    const Grid& g = *problem.grid();
    if (contact_tol < 0.0) {
        contact_tol = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, sup_norm(problem.psi().values(), g));
    }
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.active(n) && u[n] - problem.psi()[n] <= contact_tol) mask[n] = 1;
    }
    return contact_report_from_mask(problem.grid(), std::move(mask), thresholds);
}

FreeBoundarySample sample_density(const ContactReport& report, std::size_t node, const DensityThresholds& thresholds) {
    const Grid& g = *report.grid;
    const double h = g.spacing();
    FreeBoundarySample s;
    s.node = node;
    const auto centre = g.multi_index(node);
    const int dim = g.dim();
    for (double rh = 4.0; rh <= thresholds.max_radius_h + 1e-9; rh *= 2.0) {
        const int reach = static_cast<int>(std::floor(rh));
        double weight = 0.0;
        double total = 0.0;
        std::array<int, kMaxDim> off{0, 0, 0};
        std::array<int, kMaxDim> lim{0, 0, 0};
        for (int a = 0; a < dim; ++a) lim[a] = reach;
        for (off[2] = -lim[2]; off[2] <= lim[2]; ++off[2]) {
            for (off[1] = -lim[1]; off[1] <= lim[1]; ++off[1]) {
                for (off[0] = -lim[0]; off[0] <= lim[0]; ++off[0]) {
                    if (off[0] * off[0] + off[1] * off[1] + off[2] * off[2] > rh * rh + 1e-9) continue;
                    std::array<int, kMaxDim> idx{centre[0] + off[0], centre[1] + off[1], centre[2] + off[2]};
                    if (!g.in_lattice(idx)) continue;
                    const std::size_t n = g.linear_index(idx);
                    if (!g.active(n)) continue;
                    total += 1.0;
                    if (!report.contact[n]) continue;
                    bool split = false;
                    for (int a = 0; a < dim && !split; ++a) {
                        for (int dir : {-1, 1}) {
                            const auto nb = g.neighbor(n, a, dir);
                            if (nb >= 0 && g.active(static_cast<std::size_t>(nb)) && !report.contact[static_cast<std::size_t>(nb)]) {
                                split = true;
                                break;
                            }
                        }
                    }
                    weight += split ? 0.5 : 1.0;
                }
            }
        }
        s.radii.push_back(rh * h);
        s.density.push_back(total > 0.0 ? weight / total : 0.0);
    }
    if (s.density.size() < 2) {
        s.cls = FreeBoundaryClass::Indeterminate;
        return s;
    }
    const double d0 = s.density[0], d1 = s.density[1];
    auto regular = [&](double d) { return d >= thresholds.regular_lo && d <= thresholds.regular_hi; };
    if (regular(d0) && regular(d1)) {
        s.cls = FreeBoundaryClass::Regular;
    } else if (d0 <= thresholds.singular_max && d1 <= thresholds.singular_max) {
        s.cls = FreeBoundaryClass::Singular;
    } else {
        s.cls = FreeBoundaryClass::Indeterminate;
    }
    return s;
}

FreeBoundaryClass classify_free_boundary_point(const ContactReport& report, std::size_t node,
                                               const DensityThresholds& thresholds) {
    if (!std::binary_search(report.free_boundary_nodes.begin(), report.free_boundary_nodes.end(), node)) {
        throw DomainError("node is not on the free boundary");
    }
    return sample_density(report, node, thresholds).cls;
}

int contact_components(const ContactReport& report) {
    const Grid& g = *report.grid;
    std::vector<int> label(g.size(), -1);
    int count = 0;
    std::vector<std::size_t> stack;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!report.contact[n] || label[n] >= 0 || g.node_class(n) != NodeClass::Interior) continue;
        label[n] = count;
        stack.push_back(n);
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            for (int a = 0; a < g.dim(); ++a) {
                for (int dir : {-1, 1}) {
                    const auto nb = g.neighbor(k, a, dir);
                    if (nb < 0) continue;
                    const auto j = static_cast<std::size_t>(nb);
                    if (!report.contact[j] || label[j] >= 0 || g.node_class(j) != NodeClass::Interior) continue;
                    label[j] = count;
                    stack.push_back(j);
                }
            }
        }
        ++count;
    }
    return count;
}

std::vector<PerturbationRun> schaeffer_perturbation_experiment(const ScalarObstacleProblem& problem,
                                                               std::span<const double> t_list, const PsorConfig& cfg,
                                                               const DensityThresholds& thresholds) {
    std::vector<PerturbationRun> runs;
    for (double t : t_list) {
        const ScalarObstacleProblem p = problem.shifted(t);
        const PsorResult sol = solve_psor(p, cfg);
        const ContactReport report = extract_contact(sol.u, p, thresholds);
        PerturbationRun run;
        run.t = t;
        run.free_boundary_points = report.free_boundary_nodes.size();
        run.regular = report.count(FreeBoundaryClass::Regular);
        run.singular = report.count(FreeBoundaryClass::Singular);
        run.indeterminate = report.count(FreeBoundaryClass::Indeterminate);
        run.components = contact_components(report);
        for (const auto& s : report.samples) {
            if (s.cls == FreeBoundaryClass::Singular) run.singular_nodes.push_back(s.node);
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

PinchFixture two_lobe_pinch_fixture(double h, const PsorConfig& cfg, double a, double c, double b) {
    const GridPtr grid = build_grid(ShapeSpec::box(2, {-1.0, -1.0, 0.0}, {1.0, 1.0, 0.0}), h);
    const ScalarField psi = sample_scalar(grid, [&](const Point& x) {
        const double q = x[0] * x[0] - a * a;
        return 1.0 - c * q * q - b * x[1] * x[1];
    });
    const ScalarObstacleProblem base(psi, ScalarField(grid, 0.0));

    auto components_at = [&](double t) {
        const ScalarObstacleProblem p = base.shifted(t);
        const PsorResult sol = solve_psor(p, cfg);
        return contact_components(extract_contact(sol.u, p, {}, -1.0));
    };
    // The lowest admissible shift puts g at the boundary maximum of psi, where
    // the contact set is largest. Joined at lo, split (or empty) at hi.
    double lo = -std::numeric_limits<double>::infinity();
    for (std::size_t n : grid->boundary_nodes()) lo = std::max(lo, psi[n]);
    if (components_at(lo) != 1) throw InvalidProblem("pinch fixture: contact set is not a single lobe at the lowest shift");
    double step = 0.25;
    double hi = lo + step;
    while (components_at(hi) == 1) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for (int it = 0; it < 40 && hi - lo > 1e-6; ++it) {
        const double mid = 0.5 * (lo + hi);
        (components_at(mid) == 1 ? lo : hi) = mid;
    }
    return PinchFixture{base.shifted(lo), lo};
}

}  // namespace fblab
