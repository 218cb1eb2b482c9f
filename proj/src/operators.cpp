#include "fblab/operators.hpp"

#include <algorithm>
#include <cmath>

#include "fblab/error.hpp"

namespace fblab {

namespace {

double laplacian_at(const Grid& g, std::span<const double> values, std::size_t stride_m, std::size_t c,
                    std::size_t node) {
    const double centre = values[node * stride_m + c];
    double sum = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const auto s = static_cast<std::size_t>(g.stride(a));
        // Pairwise sum keeps the stencil symmetric under axis reflection.
        sum += values[(node - s) * stride_m + c] + values[(node + s) * stride_m + c];
    }
    const double h = g.spacing();
    return (sum - 2.0 * g.dim() * centre) / (h * h);
}

}  // namespace

ScalarField laplacian_apply(const ScalarField& f) {
    const Grid& g = *f.grid();
    ScalarField out(f.grid());
    for (std::size_t n : g.interior_nodes()) out[n] = laplacian_at(g, f.values(), 1, 0, n);
    return out;
}

ScalarField laplacian_apply(const VectorField& f, int component) {
    if (component < 0 || component >= f.components()) throw DomainError("component out of range");
    const Grid& g = *f.grid();
    ScalarField out(f.grid());
    const auto m = static_cast<std::size_t>(f.components());
    for (std::size_t n : g.interior_nodes()) out[n] = laplacian_at(g, f.values(), m, static_cast<std::size_t>(component), n);
    return out;
}

VectorField gradient_apply(const ScalarField& f) {
    const Grid& g = *f.grid();
    VectorField out(f.grid(), g.dim());
    const double inv2h = 0.5 / g.spacing();
    for (std::size_t n : g.interior_nodes()) {
        for (int a = 0; a < g.dim(); ++a) {
            const auto s = static_cast<std::size_t>(g.stride(a));
            out(n, a) = (f[n + s] - f[n - s]) * inv2h;
        }
    }
    return out;
}

VectorField jacobian_apply(const VectorField& u) {
    const Grid& g = *u.grid();
    const int m = u.components();
    const int dim = g.dim();
    VectorField out(u.grid(), m * dim);
    const double inv2h = 0.5 / g.spacing();
    for (std::size_t n : g.interior_nodes()) {
        for (int a = 0; a < dim; ++a) {
            const auto s = static_cast<std::size_t>(g.stride(a));
            for (int c = 0; c < m; ++c) out(n, c * dim + a) = (u(n + s, c) - u(n - s, c)) * inv2h;
        }
    }
    return out;
}

double edge_weight(const Grid& grid, std::size_t a, std::size_t b) noexcept {
    return (grid.node_class(a) == NodeClass::Boundary && grid.node_class(b) == NodeClass::Boundary) ? 0.5 : 1.0;
}

ScalarField energy_density(const VectorField& u) {
    const Grid& g = *u.grid();
    const int m = u.components();
    const double h2 = g.spacing() * g.spacing();
    ScalarField out(u.grid());
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        for (int a = 0; a < g.dim(); ++a) {
            const auto nb = g.neighbor(n, a, +1);
            if (nb < 0) continue;
            const auto j = static_cast<std::size_t>(nb);
            if (!g.active(j)) continue;
            double d2 = 0.0;
            for (int c = 0; c < m; ++c) {
                const double d = u(j, c) - u(n, c);
                d2 += d * d;
            }
            const double share = 0.5 * edge_weight(g, n, j) * d2 / h2;
            out[n] += share;
            out[j] += share;
        }
    }
    return out;
}

double dirichlet_energy(const VectorField& u) {
    const ScalarField e = energy_density(u);
    double total = 0.0;
    for (double v : e.values()) total += v;
    return total * u.grid()->cell_volume();
}

double dirichlet_energy(const ScalarField& u) {
    VectorField v(u.grid(), 1, std::vector<double>(u.values().begin(), u.values().end()));
    return dirichlet_energy(v);
}

double ball_energy_from_density(const ScalarField& density, const Point& x0, double r) {
    const Grid& g = *density.grid();
    const double h = g.spacing();
    if (r < h * (1.0 - 1e-12)) throw DomainError("ball radius below grid spacing is unresolvable");
    std::array<int, kMaxDim> lo{0, 0, 0};
    std::array<int, kMaxDim> hi{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor((x0[a] - r - g.origin()[a]) / h)));
        hi[a] = std::min(g.extents()[a] - 1, static_cast<int>(std::ceil((x0[a] + r - g.origin()[a]) / h)));
        if (lo[a] > hi[a]) throw DomainError("ball does not meet the domain");
    }
    const double r2 = r * r * (1.0 + 1e-12);
    double sum = 0.0;
    bool any = false;
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (idx[2] = lo[2]; idx[2] <= hi[2]; ++idx[2]) {
        for (idx[1] = lo[1]; idx[1] <= hi[1]; ++idx[1]) {
            for (idx[0] = lo[0]; idx[0] <= hi[0]; ++idx[0]) {
                const std::size_t n = g.linear_index(idx);
                if (!g.active(n)) continue;
                const Point p = g.position(n);
                double d2 = 0.0;
                for (int a = 0; a < g.dim(); ++a) d2 += (p[a] - x0[a]) * (p[a] - x0[a]);
                if (d2 > r2) continue;
                sum += density[n];
                any = true;
            }
        }
    }
    if (!any) throw DomainError("ball does not meet the domain");
    return sum * g.cell_volume();
}

double ball_energy(const VectorField& u, const Point& x0, double r) {
    return ball_energy_from_density(energy_density(u), x0, r);
}

}  // namespace fblab
