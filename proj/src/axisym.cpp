#include "fblab/axisym.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fblab/error.hpp"

namespace fblab {

AxisymGrid::AxisymGrid(double h) : h_(h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw GridError("grid spacing must be positive");
    const int reach = static_cast<int>(std::ceil((1.0 + h) / h));
    nr_ = reach + 1;
    nz_ = 2 * (reach + 1);
    classes_.assign(static_cast<std::size_t>(nr_) * static_cast<std::size_t>(nz_), NodeClass::Exterior);
    const double tol = 1e-9 * h;
    for (int j = 0; j < nz_; ++j) {
        for (int i = 0; i < nr_; ++i) {
            const double rho = std::hypot(r(i), z(j));
            NodeClass c = NodeClass::Exterior;
            if (rho < 1.0 - 0.5 * h - tol) {
                c = NodeClass::Interior;
            } else if (std::abs(rho - 1.0) <= 0.5 * h + tol) {
                c = NodeClass::Boundary;
            }
            classes_[index(i, j)] = c;
            if (c == NodeClass::Interior) interior_.push_back(index(i, j));
        }
    }
    if (interior_.empty()) throw GridError("resolution too coarse: no interior nodes");
}

double AxisymField::norm(std::size_t n) const noexcept { return std::hypot(ur[n], uz[n]); }

AxisymProblem::AxisymProblem(double h, int k_, double scale) : grid(std::make_shared<AxisymGrid>(h)), k(k_), boundary_scale(scale) {
    if (k < 1) throw InvalidProblem("winding number k must be >= 1");
    if (!(scale >= 1.0 - 1e-12)) throw InvalidProblem("boundary data must stay outside the unit ball");
}

namespace {

void apply_boundary(const AxisymProblem& p, AxisymField& u) {
    const AxisymGrid& g = *p.grid;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.node_class(n) != NodeClass::Boundary) continue;
        const double r = g.r(g.i_of(n)), z = g.z(g.j_of(n));
        const double rho = std::hypot(r, z);
        u.ur[n] = p.boundary_scale * r / rho;
        u.uz[n] = p.boundary_scale * z / rho;
    }
    for (int j = 0; j < g.nz(); ++j) u.ur[g.index(0, j)] = 0.0;
}

struct Weights {
    double r_plus = 0.0;   // r_{i+1/2}
    double r_minus = 0.0;  // r_{i-1/2}, zero on the axis
    double w = 0.0;        // axial edge weight
    double node = 0.0;     // h^2 / r_i, zero on the axis
};

Weights weights(const AxisymGrid& g, int i) {
    const double h = g.spacing();
    Weights w;
    w.r_plus = (i + 0.5) * h;
    w.r_minus = i > 0 ? (i - 0.5) * h : 0.0;
    w.w = i > 0 ? i * h : h / 8.0;
    w.node = i > 0 ? h / i : 0.0;
    return w;
}

}  // namespace

double reduced_energy(const AxisymField& u, int k) {
    const AxisymGrid& g = *u.grid;
    const double k2 = static_cast<double>(k) * k;
    double sum = 0.0;
    for (int j = 0; j < g.nz(); ++j) {
        for (int i = 0; i < g.nr(); ++i) {
            const std::size_t n = g.index(i, j);
            if (!g.active(n)) continue;
            const Weights w = weights(g, i);
            const bool bn = g.node_class(n) == NodeClass::Boundary;
            if (i + 1 < g.nr()) {
                const std::size_t m = g.index(i + 1, j);
                if (g.active(m)) {
                    const double f = (bn && g.node_class(m) == NodeClass::Boundary) ? 0.5 : 1.0;
                    const double dr = u.ur[m] - u.ur[n], dz = u.uz[m] - u.uz[n];
                    sum += f * w.r_plus * (dr * dr + dz * dz);
                }
            }
            if (j + 1 < g.nz()) {
                const std::size_t m = g.index(i, j + 1);
                if (g.active(m)) {
                    const double f = (bn && g.node_class(m) == NodeClass::Boundary) ? 0.5 : 1.0;
                    const double dr = u.ur[m] - u.ur[n], dz = u.uz[m] - u.uz[n];
                    sum += f * w.w * (dr * dr + dz * dz);
                }
            }
            sum += (bn ? 0.5 : 1.0) * k2 * w.node * u.ur[n] * u.ur[n];
        }
    }
    return 2.0 * std::numbers::pi * sum;
}

AxisymField axisym_initial(const AxisymProblem& problem) {
    const AxisymGrid& g = *problem.grid;
    AxisymField u(problem.grid);
    for (std::size_t n : g.interior_nodes()) {
        const double r = g.r(g.i_of(n)), z = g.z(g.j_of(n));
        const double rho = std::hypot(r, z);
        const double len = std::max(1.0, problem.boundary_scale * rho);
        u.ur[n] = len * r / rho;
        u.uz[n] = len * z / rho;
    }
    apply_boundary(problem, u);
    return u;
}

namespace {

void project(double& ur, double& uz) {
    const double rho = std::hypot(ur, uz);
    if (rho >= 1.0) return;
    if (rho == 0.0) {
        ur = 1.0;
        uz = 0.0;
        return;
    }
    ur /= rho;
    uz /= rho;
}

}  // namespace

AxisymResult solve_axisym(const AxisymProblem& problem, const AxisymSolverConfig& cfg) {
    if (cfg.max_iters < 1) throw DomainError("max_iters must be >= 1");
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw DomainError("theta must lie in (0, 1]");
    const AxisymGrid& g = *problem.grid;
    const double k2 = static_cast<double>(problem.k) * problem.k;
    AxisymResult res{cfg.initial ? *cfg.initial : axisym_initial(problem), 0, 0.0, 0.0, false, {}};
    if (res.u.grid != problem.grid) throw DomainError("initial field must live on the problem grid");
    apply_boundary(problem, res.u);
    for (std::size_t n : g.interior_nodes()) {
        if (g.i_of(n) == 0) {
            if (std::abs(res.u.uz[n]) < 1.0) res.u.uz[n] = res.u.uz[n] < 0.0 ? -1.0 : 1.0;
        } else {
            project(res.u.ur[n], res.u.uz[n]);
        }
    }

    double energy = reduced_energy(res.u, problem.k);
    if (cfg.track_energy) res.energy_history.push_back(energy);
    double theta = cfg.theta;
    AxisymField trial = res.u;
    const auto& nodes = g.interior_nodes();
    for (long it = 1; it <= cfg.max_iters; ++it) {
        double next = energy;
        double max_update = 0.0;
        for (;;) {
            max_update = 0.0;
            for (std::size_t n : nodes) {
                const int i = g.i_of(n), j = g.j_of(n);
                const Weights w = weights(g, i);
                const std::size_t up = g.index(i, j + 1), down = g.index(i, j - 1), out = g.index(i + 1, j);
                const double ur = res.u.ur[n], uz = res.u.uz[n];
                if (i == 0) {
                    const double grad = w.r_plus * (uz - res.u.uz[out]) + w.w * (2.0 * uz - (res.u.uz[up] + res.u.uz[down]));
                    const double diag = w.r_plus + 2.0 * w.w;
                    double nz = uz - theta * grad / diag;
                    if (std::abs(nz) < 1.0) nz = nz < 0.0 ? -1.0 : 1.0;
                    trial.uz[n] = nz;
                    max_update = std::max(max_update, std::abs(nz - uz));
                    continue;
                }
                const std::size_t in = g.index(i - 1, j);
                const double grad_r = w.r_plus * (ur - res.u.ur[out]) + w.r_minus * (ur - res.u.ur[in]) +
                                      w.w * (2.0 * ur - (res.u.ur[up] + res.u.ur[down])) + k2 * w.node * ur;
                const double grad_z = w.r_plus * (uz - res.u.uz[out]) + w.r_minus * (uz - res.u.uz[in]) +
                                      w.w * (2.0 * uz - (res.u.uz[up] + res.u.uz[down]));
                const double diag = w.r_plus + w.r_minus + 2.0 * w.w + k2 * w.node;
                double nr = ur - theta * grad_r / diag;
                double nz = uz - theta * grad_z / diag;
                project(nr, nz);
                trial.ur[n] = nr;
                trial.uz[n] = nz;
                max_update = std::max({max_update, std::abs(nr - ur), std::abs(nz - uz)});
            }
            next = reduced_energy(trial, problem.k);
            if (next <= energy || theta < 1e-8) break;
            theta *= 0.5;
        }
        if (next > energy) {
            res.iterations = it;
            res.converged = true;
            break;
        }
        std::swap(res.u, trial);
        for (std::size_t n : nodes) {
            trial.ur[n] = res.u.ur[n];
            trial.uz[n] = res.u.uz[n];
        }
        const double rel = energy > 0.0 ? (energy - next) / energy : 0.0;
        energy = next;
        res.last_max_update = max_update;
        res.iterations = it;
        if (cfg.track_energy) res.energy_history.push_back(energy);
        if (rel < cfg.tol && max_update < cfg.update_tol) {
            res.converged = true;
            break;
        }
    }
    res.energy = reduced_energy(res.u, problem.k);
    if (!res.converged && cfg.throw_on_failure) {
        throw ConvergenceError("axisymmetric solver did not converge", res.last_max_update, res.iterations);
    }
    return res;
}

std::vector<std::uint8_t> axisym_contact_mask(const AxisymField& u, double tol) {
    const AxisymGrid& g = *u.grid;
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.active(n) && u.norm(n) <= 1.0 + tol) mask[n] = 1;
    }
    return mask;
}

std::vector<AxisFace> axisym_free_boundary(const AxisymField& u, std::span<const std::uint8_t> contact) {
    const AxisymGrid& g = *u.grid;
    std::vector<AxisFace> faces;
    auto edge = [&](std::size_t a, std::size_t b) {
        if (!g.active(a) || !g.active(b) || contact[a] == contact[b]) return;
        if (g.node_class(a) != NodeClass::Interior && g.node_class(b) != NodeClass::Interior) return;
        const std::size_t c = contact[a] ? a : b;
        const std::size_t f = contact[a] ? b : a;
        faces.push_back({c, f, 0.5 * (g.r(g.i_of(a)) + g.r(g.i_of(b))), 0.5 * (g.z(g.j_of(a)) + g.z(g.j_of(b)))});
    };
    for (int j = 0; j < g.nz(); ++j) {
        for (int i = 0; i < g.nr(); ++i) {
            const std::size_t n = g.index(i, j);
            if (i + 1 < g.nr()) edge(n, g.index(i + 1, j));
            if (j + 1 < g.nz()) edge(n, g.index(i, j + 1));
        }
    }
    return faces;
}

std::vector<AxisNodeReport> axis_branch_check(const AxisymField& u, int k, double branch_tol, double contact_tol) {
    const AxisymGrid& g = *u.grid;
    const double h = g.spacing();
    if (branch_tol <= 0.0) branch_tol = 3.0 * h;
    const auto contact = axisym_contact_mask(u, contact_tol);
    const double odd = (k % 2 == 0) ? 0.0 : 1.0;
    const double sin_k = std::round(std::sin(k * std::numbers::pi / 2.0));
    std::vector<AxisNodeReport> out;
    for (int j = 1; j + 1 < g.nz(); ++j) {
        const std::size_t n = g.index(0, j);
        if (g.node_class(n) != NodeClass::Interior) continue;
        const std::size_t up = g.index(0, j + 1), down = g.index(0, j - 1), out_n = g.index(1, j);
        AxisNodeReport rep;
        rep.node = n;
        rep.z = g.z(j);
        rep.norm_minus_one = u.norm(n) - 1.0;
        rep.radial_quotient = u.ur[out_n] / h;
        rep.dx_u1 = odd * u.ur[out_n] / h;
        rep.dy_u2 = sin_k * u.ur[out_n] / h;
        rep.dz_u3 = (u.uz[up] - u.uz[down]) / (2.0 * h);
        rep.max_partial = std::max({std::abs(rep.dx_u1), std::abs(rep.dy_u2), std::abs(rep.dz_u3)});
        rep.contact = contact[n] != 0;
        if (rep.contact) {
            for (std::size_t m : {up, down, out_n}) {
                if (g.active(m) && !contact[m]) rep.free_boundary = true;
            }
        }
        rep.branch = rep.free_boundary && rep.max_partial <= branch_tol;
        out.push_back(rep);
    }
    return out;
}

ConeFitReport cone_fit(const std::vector<AxisFace>& faces, double h, double vertex_z, int k, double r_lo, double r_hi) {
    if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
    if (r_lo <= 0.0) r_lo = 4.0 * h;
    if (r_hi <= 0.0) r_hi = 16.0 * h;
    ConeFitReport rep;
    rep.vertex_z = vertex_z;
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    bool hug = true;
    for (const auto& f : faces) {
        const Eigen::Vector2d p(f.r, f.z - vertex_z);
        const double d = p.norm();
        if (d < r_lo - 1e-12 || d > r_hi + 1e-12) continue;
        M += p * p.transpose();
        ++rep.samples;
        if (f.r > 2.0 * h + 1e-12) hug = false;
    }
    if (rep.samples == 0) throw DomainError("no free-boundary faces in the cone-fit window");
    rep.axis_hugging = hug;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M);
    const Eigen::Vector2d dir = es.eigenvectors().col(1);
    rep.cos_phi = std::min(1.0, std::abs(dir(1)));
    rep.phi = std::acos(rep.cos_phi);
    rep.residual = std::sqrt(std::max(0.0, es.eigenvalues()(0)) / static_cast<double>(rep.samples));
    rep.nearest_zero = nearest_legendre_zero(2 * k - 1, rep.cos_phi);
    rep.zero_gap = std::abs(rep.cos_phi - rep.nearest_zero);
    return rep;
}

VectorField lift(const AxisymField& u, int k, const GridPtr& grid3) {
    const AxisymGrid& g = *u.grid;
    if (grid3->dim() != 3) throw DomainError("lift needs a 3D grid");
    const double h = g.spacing();
    return sample_vector(grid3, 3, [&](const Point& x, std::span<double> out) {
        const double r = std::hypot(x[0], x[1]);
        const double th = std::atan2(x[1], x[0]);
        const double fi = r / h;
        const double fj = x[2] / h + g.nz() / 2 - 0.5;
        const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, g.nr() - 2);
        const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, g.nz() - 2);
        const double a = std::clamp(fi - i0, 0.0, 1.0), b = std::clamp(fj - j0, 0.0, 1.0);
        double ur = 0.0, uz = 0.0, wsum = 0.0;
        for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
                const std::size_t n = g.index(i0 + di, j0 + dj);
                if (!g.active(n)) continue;
                const double w = (di ? a : 1.0 - a) * (dj ? b : 1.0 - b);
                ur += w * u.ur[n];
                uz += w * u.uz[n];
                wsum += w;
            }
        }
        if (wsum > 0.0) {
            ur /= wsum;
            uz /= wsum;
        }
        out[0] = ur * std::cos(k * th);
        out[1] = ur * std::sin(k * th);
        out[2] = uz;
    });
}

}  // namespace fblab
