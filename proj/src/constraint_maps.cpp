#include "fblab/constraint_maps.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "fblab/error.hpp"
#include "fblab/operators.hpp"
#include "fblab/parallel.hpp"

namespace fblab {

namespace {

Vec to_vec(std::span<const double> v) {
    Vec out{0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c];
    return out;
}

double dist2(const Vec& a, const Vec& b, int m) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
}

Vec body_center(const ConvexBody& body) {
    return std::visit(
        [](const auto& s) -> Vec {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                return s.point;
            } else {
                return s.center;
            }
        },
        body.shape());
}

/// Boundary point hit by the ray from c through y (y inside O). Used for the
/// initial map: unlike the nearest-point projection it is continuous away
/// from c, so the start carries a single point singularity.
Vec central_projection(const ConvexBody& body, const Vec& c, const Vec& y) {
    if (std::holds_alternative<HalfSpace>(body.shape())) return body.project_out(y).point;
    const int m = body.dim();
    Vec dir{0.0, 0.0, 0.0};
    double len = 0.0;
    for (int k = 0; k < m; ++k) {
        dir[k] = y[k] - c[k];
        len += dir[k] * dir[k];
    }
    if (len == 0.0) {
        dir = {1.0, 0.0, 0.0};
    } else {
        len = std::sqrt(len);
        for (int k = 0; k < m; ++k) dir[k] /= len;
    }
    auto at = [&](double s) {
        Vec p = c;
        for (int k = 0; k < m; ++k) p[k] += s * dir[k];
        return p;
    };
    double lo = 0.0;
    double hi = body.diameter();
    while (body.signed_distance(at(hi)) < 0.0) hi *= 2.0;
    for (int i = 0; i < 100 && hi - lo > 1e-15 * body.diameter(); ++i) {
        const double mid = 0.5 * (lo + hi);
        (body.signed_distance(at(mid)) < 0.0 ? lo : hi) = mid;
    }
    return body.project_out(at(hi)).point;
}

}  // namespace

ConstraintMapProblem::ConstraintMapProblem(GridPtr grid, ConvexBody body, int m, MapFunction g)
    : body_(std::move(body)), g_(std::move(g)) {
    if (!grid) throw InvalidProblem("grid is required");
    if (m != body_.dim()) throw InvalidProblem("target dimension must match the obstacle dimension");
    if (!g_) throw InvalidProblem("boundary datum is required");
    boundary_ = VectorField(grid, m);
    for (std::size_t n : grid->boundary_nodes()) g_(grid->boundary_sample_point(n), boundary_.at(n));
    validate();
}

ConstraintMapProblem::ConstraintMapProblem(ConvexBody body, VectorField boundary_values)
    : body_(std::move(body)), boundary_(std::move(boundary_values)) {
    if (!boundary_.grid()) throw InvalidProblem("grid is required");
    if (boundary_.components() != body_.dim()) throw InvalidProblem("target dimension must match the obstacle dimension");
    validate();
}

void ConstraintMapProblem::validate() const {
    const Grid& g = *boundary_.grid();
    for (std::size_t n : g.boundary_nodes()) {
        const auto v = boundary_.at(n);
        for (double x : v) {
            if (!std::isfinite(x)) throw InvalidProblem("boundary datum must be finite");
        }
        if (body_.signed_distance(to_vec(v)) < -1e-8) {
            throw InvalidProblem("boundary datum enters the obstacle: admissible class is empty");
        }
    }
}

void ConstraintMapProblem::boundary_value_near(const Point& x, std::span<double> out) const {
    const Grid& g = *grid();
    const Point xb = g.shape().nearest_boundary_point(x);
    if (g_) {
        g_(xb, out);
        return;
    }
    std::size_t best = g.boundary_nodes().front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t n : g.boundary_nodes()) {
        const Point p = g.position(n);
        double d = 0.0;
        for (int a = 0; a < g.dim(); ++a) d += (p[a] - xb[a]) * (p[a] - xb[a]);
        if (d < best_d) {
            best_d = d;
            best = n;
        }
    }
    const auto v = boundary_.at(best);
    std::copy(v.begin(), v.end(), out.begin());
}

VectorField initial_map(const ConstraintMapProblem& problem, const ConstraintSolverConfig& cfg) {
    const GridPtr& gp = problem.grid();
    const Grid& g = *gp;
    const int m = problem.m();
    const ConvexBody& body = problem.body();
    VectorField u(gp, m);
    if (cfg.init == MapInit::Given) {
        if (!cfg.initial || cfg.initial->grid() != gp || cfg.initial->components() != m) {
            throw DomainError("given initial map must live on the problem grid with m components");
        }
        u = *cfg.initial;
    } else {
        double dmax = 0.0;
        for (std::size_t n : g.interior_nodes()) dmax = std::max(dmax, -g.shape().signed_distance(g.position(n)));
        const Vec c0 = body_center(body);
        std::vector<double> gb(static_cast<std::size_t>(m));
        for (std::size_t n : g.interior_nodes()) {
            const Point x = g.position(n);
            const double d = std::max(0.0, -g.shape().signed_distance(x));
            const double t = dmax > 0.0 ? 1.0 - d / dmax : 1.0;
            problem.boundary_value_near(x, gb);
            for (int k = 0; k < m; ++k) u(n, k) = t * gb[static_cast<std::size_t>(k)] + (1.0 - t) * c0[static_cast<std::size_t>(k)];
        }
    }
    for (std::size_t n : g.boundary_nodes()) {
        const auto b = problem.boundary_values().at(n);
        std::copy(b.begin(), b.end(), u.at(n).begin());
    }
    const Vec c = body_center(body);
    for (std::size_t n : g.interior_nodes()) {
        const Vec y = to_vec(u.at(n));
        const Vec p = cfg.init == MapInit::RadialBlend && body.signed_distance(y) < 0.0 ? central_projection(body, c, y)
                                                                                         : body.project_out(y).point;
        for (int k = 0; k < m; ++k) u(n, k) = p[static_cast<std::size_t>(k)];
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) {
            for (int k = 0; k < m; ++k) u(n, k) = 0.0;
        }
    }
    return u;
}

namespace {

struct SweepStats {
    double energy_change = 0.0;
    double max_update = 0.0;
    long ties = 0;
};

/// One red-black sweep. Every node update moves u toward the exact local
/// minimiser project_out(mean of neighbours) without raising the local energy.
SweepStats rb_sweep(const Grid& g, const ConvexBody& body, int m, double omega,
                    const std::array<std::vector<std::size_t>, 2>& colors, std::vector<double>& values) {
    const int dim = g.dim();
    std::array<std::size_t, kMaxDim> strides{};
    for (int a = 0; a < dim; ++a) strides[a] = static_cast<std::size_t>(g.stride(a));
    const auto M = static_cast<std::size_t>(m);
    const double inv_deg = 1.0 / (2.0 * dim);
    const double scale = 2.0 * dim * std::pow(g.spacing(), dim - 2);
    double* u = values.data();

    SweepStats stats;
    for (const auto& nodes : colors) {
        std::vector<double> max_upd((nodes.size() + 4095) / 4096, 0.0);
        std::vector<long> ties(max_upd.size(), 0);
        stats.energy_change += parallel_sum(nodes.size(), [&](std::size_t begin, std::size_t end) {
            double de = 0.0;
            double mu = 0.0;
            long tb = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t n = nodes[k];
                Vec cur{0.0, 0.0, 0.0}, avg{0.0, 0.0, 0.0};
                for (std::size_t c = 0; c < M; ++c) {
                    cur[c] = u[n * M + c];
                    double s = 0.0;
                    for (int a = 0; a < dim; ++a) s += u[(n - strides[a]) * M + c] + u[(n + strides[a]) * M + c];
                    avg[c] = s * inv_deg;
                }
                const double old_gap = dist2(cur, avg, m);
                Vec cand{0.0, 0.0, 0.0};
                for (std::size_t c = 0; c < M; ++c) cand[c] = cur[c] + omega * (avg[c] - cur[c]);
                Projection pc = body.project_out(cand);
                Vec next = pc.point;
                double new_gap = dist2(next, avg, m);
                if (new_gap > old_gap) {
                    pc = body.project_out(avg);
                    next = pc.point;
                    new_gap = dist2(next, avg, m);
                }
                if (pc.tie) ++tb;
                if (new_gap > old_gap) continue;  // only possible by round-off
                double upd = 0.0;
                for (std::size_t c = 0; c < M; ++c) {
                    upd = std::max(upd, std::abs(next[c] - cur[c]));
                    u[n * M + c] = next[c];
                }
                mu = std::max(mu, upd);
                de += scale * (new_gap - old_gap);
            }
            max_upd[begin / 4096] = mu;
            ties[begin / 4096] = tb;
            return de;
        });
        for (double v : max_upd) stats.max_update = std::max(stats.max_update, v);
        for (long t : ties) stats.ties += t;
    }
    return stats;
}

}  // namespace

ConstraintSolveResult solve_projected_gradient(const ConstraintMapProblem& problem, const ConstraintSolverConfig& cfg) {
    if (cfg.max_iters < 1) throw DomainError("max_iters must be >= 1");
    if (!(cfg.tol > 0.0) || !(cfg.update_tol > 0.0)) throw DomainError("tolerances must be positive");
    const GridPtr& gp = problem.grid();
    const Grid& g = *gp;
    const int m = problem.m();
    const ConvexBody& body = problem.body();
    const double h = g.spacing();

    ConstraintSolveResult res;
    res.u = initial_map(problem, cfg);
    double energy = dirichlet_energy(res.u);
    if (cfg.track_energy) res.energy_history.push_back(energy);

    auto finish = [&](long it, bool ok) {
        res.iterations = it;
        res.energy = dirichlet_energy(res.u);
        res.converged = ok;
        if (!ok && cfg.throw_on_failure) {
            throw ConvergenceError("constraint map solver did not converge", res.last_relative_decrease, it);
        }
        return res;
    };

    if (g.interior_nodes().empty() || energy == 0.0) return finish(0, true);

    if (cfg.scheme == MapScheme::RedBlackSor) {
        if (!(cfg.omega > 0.0 && cfg.omega < 2.0)) throw DomainError("relaxation factor must lie in (0, 2)");
        std::array<std::vector<std::size_t>, 2> colors;
        for (std::size_t n : g.interior_nodes()) colors[static_cast<std::size_t>(g.color(n))].push_back(n);
        std::vector<double> values(res.u.values().begin(), res.u.values().end());
        for (long it = 1; it <= cfg.max_iters; ++it) {
            const SweepStats s = rb_sweep(g, body, m, cfg.omega, colors, values);
            res.tie_breaks += s.ties;
            const double before = energy;
            energy = std::max(0.0, energy + s.energy_change);
            if (it % 256 == 0) {
                energy = dirichlet_energy(VectorField(gp, m, values));
            }
            if (cfg.track_energy) res.energy_history.push_back(energy);
            res.last_relative_decrease = before > 0.0 ? (before - energy) / before : 0.0;
            res.last_max_update = s.max_update;
            if ((energy == 0.0 || res.last_relative_decrease < cfg.tol) && s.max_update < cfg.update_tol) {
                res.u = VectorField(gp, m, std::move(values));
                return finish(it, true);
            }
        }
        res.u = VectorField(gp, m, std::move(values));
        return finish(cfg.max_iters, false);
    }

    // Jacobi projected gradient: u <- P(u + tau Lap_h u), tau halved whenever
    // the energy would rise.
    const double tau_max = h * h / (4.0 * g.dim());
    double tau = cfg.tau0 > 0.0 ? std::min(cfg.tau0, tau_max) : h * h / 8.0;
    const auto& interior = g.interior_nodes();
    const auto M = static_cast<std::size_t>(m);
    std::vector<double> trial(res.u.values().begin(), res.u.values().end());
    for (long it = 1; it <= cfg.max_iters; ++it) {
        const std::vector<double> cur(res.u.values().begin(), res.u.values().end());
        double next_energy = energy;
        double max_update = 0.0;
        long ties = 0;
        for (;;) {
            std::vector<long> tie_blocks((interior.size() + 4095) / 4096, 0);
            const double theta = tau * 2.0 * g.dim() / (h * h);
            max_update = parallel_max(interior.size(), [&](std::size_t begin, std::size_t end) {
                double mu = 0.0;
                long tb = 0;
                for (std::size_t k = begin; k < end; ++k) {
                    const std::size_t n = interior[k];
                    Vec p{0.0, 0.0, 0.0};
                    for (std::size_t c = 0; c < M; ++c) {
                        double s = 0.0;
                        for (int a = 0; a < g.dim(); ++a) {
                            const auto st = static_cast<std::size_t>(g.stride(a));
                            s += cur[(n - st) * M + c] + cur[(n + st) * M + c];
                        }
                        const double avg = s / (2.0 * g.dim());
                        p[c] = cur[n * M + c] + theta * (avg - cur[n * M + c]);
                    }
                    const Projection pr = body.project_out(p);
                    if (pr.tie) ++tb;
                    for (std::size_t c = 0; c < M; ++c) {
                        trial[n * M + c] = pr.point[c];
                        mu = std::max(mu, std::abs(pr.point[c] - cur[n * M + c]));
                    }
                }
                tie_blocks[begin / 4096] = tb;
                return mu;
            });
            for (long t : tie_blocks) ties += t;
            next_energy = dirichlet_energy(VectorField(gp, m, trial));
            if (next_energy <= energy || tau < 1e-12 * h * h) break;
            tau *= 0.5;
        }
        if (next_energy > energy) {
            res.last_relative_decrease = 0.0;
            res.last_max_update = 0.0;
            return finish(it, true);
        }
        std::copy(trial.begin(), trial.end(), res.u.values().begin());
        res.tie_breaks += ties;
        res.last_relative_decrease = energy > 0.0 ? (energy - next_energy) / energy : 0.0;
        res.last_max_update = max_update;
        energy = next_energy;
        if (cfg.track_energy) res.energy_history.push_back(energy);
        if ((energy == 0.0 || res.last_relative_decrease < cfg.tol) && max_update < cfg.update_tol) return finish(it, true);
    }
    return finish(cfg.max_iters, false);
}

std::vector<std::uint8_t> map_contact_mask(const VectorField& u, const ConvexBody& body, double tol) {
    const Grid& g = *u.grid();
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.active(n) && body.signed_distance(to_vec(u.at(n))) <= tol) mask[n] = 1;
    }
    return mask;
}

ScalarField el_residual(const VectorField& u, const ConstraintMapProblem& problem, std::span<const Point> exclude,
                        double exclude_radius, double contact_tol) {
    const GridPtr& gp = u.grid();
    const Grid& g = *gp;
    const int m = u.components();
    const int dim = g.dim();
    const ConvexBody& body = problem.body();
    const VectorField jac = jacobian_apply(u);
    std::vector<ScalarField> lap;
    for (int c = 0; c < m; ++c) lap.push_back(laplacian_apply(u, c));

    ScalarField out(gp);
    const auto* ball = std::get_if<Ball>(&body.shape());
    for (std::size_t n : g.interior_nodes()) {
        const Point x = g.position(n);
        bool skip = false;
        for (const Point& e : exclude) {
            double d2 = 0.0;
            for (int a = 0; a < dim; ++a) d2 += (x[a] - e[a]) * (x[a] - e[a]);
            if (d2 <= exclude_radius * exclude_radius) {
                skip = true;
                break;
            }
        }
        if (skip) continue;
        const Vec y = to_vec(u.at(n));
        Vec A{0.0, 0.0, 0.0};
        if (body.signed_distance(y) <= contact_tol) {
            const auto G = jac.at(n);
            if (ball) {
                double du2 = 0.0;
                for (double v : G) du2 += v * v;
                for (int c = 0; c < m; ++c) A[c] = -du2 * (y[c] - ball->center[c]) / (ball->radius * ball->radius);
            } else {
                const double F = body.distance_hessian_quadform(y, G, dim);
                const Vec nu = body.outward_normal(y);
                for (int c = 0; c < m; ++c) A[c] = -F * nu[c];
            }
        }
        double r2 = 0.0;
        for (int c = 0; c < m; ++c) {
            const double d = lap[static_cast<std::size_t>(c)][n] - A[c];
            r2 += d * d;
        }
        out[n] = std::sqrt(r2);
    }
    return out;
}

VectorField fixture_uk(int k, const GridPtr& grid) {
    if (grid->dim() != 2) throw DomainError("fixture_uk needs a 2D grid");
    if (k < 1) throw DomainError("fixture_uk needs k >= 1");
    return sample_vector(grid, 3, [k](const Point& x, std::span<double> out) {
        const std::complex<double> z(x[0], x[1]);
        const std::complex<double> z2 = z * z;
        std::complex<double> zk(1.0, 0.0);
        for (int i = 0; i < k; ++i) zk *= z;
        out[0] = z2.real();
        out[1] = z2.imag();
        out[2] = zk.real();
    });
}

VectorField fixture_hedgehog(const GridPtr& grid, const Point& center) {
    const int dim = grid->dim();
    return sample_vector(grid, dim, [&](const Point& x, std::span<double> out) {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        if (r2 == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = 1.0;
            return;
        }
        const double r = std::sqrt(r2);
        for (int a = 0; a < dim; ++a) out[static_cast<std::size_t>(a)] = (x[a] - center[a]) / r;
    });
}

double radial_free_boundary_radius(double outer_radius) {
    if (!(outer_radius > 1.0)) throw DomainError("outer radius must exceed the obstacle radius");
    const double R3 = outer_radius * outer_radius * outer_radius;
    auto p = [&](double r) { return r * r * r - 3.0 * R3 * r + 2.0 * R3; };
    // p(0) > 0 and p(1) = 1 - R3 < 0.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (p(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double radial_profile(double rho, double outer_radius) {
    const double rs = radial_free_boundary_radius(outer_radius);
    if (rho <= rs) return 1.0;
    const double A = 2.0 / (3.0 * rs);
    const double B = A * rs * rs * rs / 2.0;
    return A * rho + B / (rho * rho);
}

}  // namespace fblab
