#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fblab/constraint_maps.hpp"
#include "fblab/error.hpp"
#include "fblab/grid.hpp"
#include "fblab/operators.hpp"

using namespace fblab;

namespace {

GridPtr square(double lo, double hi, double h) { return build_grid(ShapeSpec::box(2, {lo, lo, 0}, {hi, hi, 0}), h); }

double max_interior(const ScalarField& f) {
    double m = 0.0;
    for (std::size_t n : f.grid()->interior_nodes()) m = std::max(m, std::abs(f[n]));
    return m;
}

}  // namespace

TEST_CASE("unit square at h = 0.5 has 3x3 nodes and one interior node") {
    const auto g = square(0.0, 1.0, 0.5);
    CHECK(g->size() == 9);
    CHECK(g->interior_nodes().size() == 1);
    CHECK(g->boundary_nodes().size() == 8);
    const Point c = g->position(g->interior_nodes()[0]);
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(0.5));
}

TEST_CASE("ball grid classification") {
    const auto g = build_grid(ShapeSpec::ball(2, {}, 1.0), 0.25);
    CHECK(g->node_class(g->nearest_node({0.0, 0.0, 0.0})) == NodeClass::Interior);
    CHECK(g->node_class(g->nearest_node({1.0, 0.0, 0.0})) == NodeClass::Boundary);
    CHECK(g->node_class(g->nearest_node({1.0, 1.0, 0.0})) == NodeClass::Exterior);
}

TEST_CASE("too coarse a grid is rejected") {
    CHECK_THROWS_AS(build_grid(ShapeSpec::ball(2, {}, 0.1), 0.5), GridError);
    CHECK_THROWS_AS(build_grid(ShapeSpec::ball(2, {}, 1.0), 0.0), GridError);
}

TEST_CASE("interior nodes only see active neighbours") {
    for (const auto& shape : {ShapeSpec::ball(3, {0.1, -0.2, 0.05}, 0.8), ShapeSpec::annulus(2, {}, 0.4, 1.0),
                              ShapeSpec::box(3, {0, 0, 0}, {1, 0.5, 0.75})}) {
        const auto g = build_grid(shape, 1.0 / 16.0);
        for (std::size_t n : g->interior_nodes()) {
            for (int a = 0; a < g->dim(); ++a) {
                for (int d : {-1, 1}) {
                    const auto nb = g->neighbor(n, a, d);
                    REQUIRE(nb >= 0);
                    CHECK(g->active(static_cast<std::size_t>(nb)));
                }
            }
        }
        for (std::size_t n : g->boundary_nodes()) CHECK(std::abs(shape.signed_distance(g->position(n))) <= g->spacing());
    }
}

TEST_CASE("grid construction is deterministic") {
    const auto a = build_grid(ShapeSpec::annulus(3, {}, 0.5, 1.0), 1.0 / 12.0);
    const auto b = build_grid(ShapeSpec::annulus(3, {}, 0.5, 1.0), 1.0 / 12.0);
    REQUIRE(a->size() == b->size());
    for (std::size_t n = 0; n < a->size(); ++n) CHECK(a->node_class(n) == b->node_class(n));
}

TEST_CASE("laplacian is exact on quadratics and zero on affine fields") {
    const auto g = square(-1.0, 1.0, 1.0 / 16.0);
    const auto q = sample_scalar(g, [](const Point& x) { return x[0] * x[0]; });
    const auto lap = laplacian_apply(q);
    for (std::size_t n : g->interior_nodes()) CHECK(lap[n] == doctest::Approx(2.0).epsilon(1e-9));
    const auto aff = sample_scalar(g, [](const Point& x) { return 3.0 * x[0] - 2.0 * x[1] + 0.5; });
    CHECK(max_interior(laplacian_apply(aff)) < 1e-9);
}

TEST_CASE("harmonic cubic has a second-order residual") {
    // Re z^3 has vanishing fourth derivatives, so the five-point residual is round-off.
    const double h = 1.0 / 64.0;
    const auto g = square(-1.0, 1.0, h);
    const auto f = sample_scalar(g, [](const Point& x) { return std::pow(std::complex<double>(x[0], x[1]), 3).real(); });
    CHECK(max_interior(laplacian_apply(f)) <= 10.0 * h * h);
}

TEST_CASE("truncation residual shrinks fourfold under refinement") {
    auto residual = [](double h) {
        const auto g = square(0.0, 1.0, h);
        return max_interior(laplacian_apply(sample_scalar(g, [](const Point& x) { return std::sin(x[0]) * std::exp(x[1]); })));
    };
    // sin x e^y is harmonic; the residual is the truncation error (h^2/12)(f_xxxx + f_yyyy).
    const double r1 = residual(1.0 / 16.0), r2 = residual(1.0 / 32.0);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("gradient is exact on affine and quadratic fields") {
    const auto g = build_grid(ShapeSpec::box(2, {0, 0, 0}, {1, 1, 0}), 1.0 / 128.0);
    const auto aff = gradient_apply(sample_scalar(g, [](const Point& x) { return 3.0 * x[0] + 2.0 * x[1]; }));
    for (std::size_t n : g->interior_nodes()) {
        CHECK(aff(n, 0) == doctest::Approx(3.0));
        CHECK(aff(n, 1) == doctest::Approx(2.0));
    }
    const auto sq = gradient_apply(sample_scalar(g, [](const Point& x) { return x[0] * x[0]; }));
    const std::size_t n = g->nearest_node({0.5, 0.5, 0});
    CHECK(std::abs(sq(n, 0) - 1.0) <= 1e-10);
    const auto c = gradient_apply(ScalarField(g, 4.0));
    for (std::size_t k : g->interior_nodes()) CHECK(c(k, 0) == 0.0);
}

TEST_CASE("operators are linear") {
    const auto g = square(0.0, 1.0, 1.0 / 20.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField a(g), b(g);
    for (std::size_t n = 0; n < g->size(); ++n) {
        a[n] = U(rng);
        b[n] = U(rng);
    }
    ScalarField s(g);
    for (std::size_t n = 0; n < g->size(); ++n) s[n] = 2.0 * a[n] - 3.0 * b[n];
    const auto la = laplacian_apply(a), lb = laplacian_apply(b), ls = laplacian_apply(s);
    const auto ga = gradient_apply(a), gb = gradient_apply(b), gs = gradient_apply(s);
    for (std::size_t n : g->interior_nodes()) {
        CHECK(ls[n] == doctest::Approx(2.0 * la[n] - 3.0 * lb[n]).epsilon(1e-9));
        for (int c = 0; c < 2; ++c) CHECK(gs(n, c) == doctest::Approx(2.0 * ga(n, c) - 3.0 * gb(n, c)).epsilon(1e-9));
    }
}

TEST_CASE("dirichlet energy") {
    SUBCASE("constant map has zero energy") {
        const auto g = square(0.0, 1.0, 0.1);
        CHECK(dirichlet_energy(VectorField(g, 3, 0.7)) == 0.0);
    }
    SUBCASE("identity on the unit square has energy 2 times the area") {
        const auto g = square(0.0, 1.0, 1.0 / 32.0);
        const auto id = sample_vector(g, 2, [](const Point& x, std::span<double> o) {
            o[0] = x[0];
            o[1] = x[1];
        });
        CHECK(dirichlet_energy(id) == doctest::Approx(2.0).epsilon(0.02));
    }
    SUBCASE("x/|x| on the annulus 0.5 <= |x| <= 1") {
        // |D(x/|x|)|^2 = 2 / rho^2, so the energy is 4 pi * 2 * (1 - 0.5).
        const auto g = build_grid(ShapeSpec::annulus(3, {}, 0.5, 1.0), 1.0 / 32.0);
        const double e = dirichlet_energy(fixture_hedgehog(g));
        CHECK(e == doctest::Approx(8.0 * std::numbers::pi * 0.5).epsilon(0.02));
    }
    SUBCASE("gradient of the energy is -2 h^dim times the Laplacian") {
        const auto g = square(0.0, 1.0, 0.125);
        ScalarField u = sample_scalar(g, [](const Point& x) { return std::sin(3 * x[0]) + x[1] * x[1]; });
        const auto lap = laplacian_apply(u);
        const std::size_t n = g->nearest_node({0.5, 0.375, 0});
        const double eps = 1e-6, e0 = dirichlet_energy(u);
        u[n] += eps;
        const double d = (dirichlet_energy(u) - e0) / eps;
        CHECK(d == doctest::Approx(-2.0 * g->cell_volume() * lap[n]).epsilon(1e-4));
    }
}

TEST_CASE("ball energy") {
    SUBCASE("constant map") {
        const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), 0.1);
        CHECK(ball_energy(VectorField(g, 3, 1.0), {}, 0.5) == 0.0);
    }
    SUBCASE("identity has density dim") {
        const double h = 1.0 / 32.0, r = 0.5;
        const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), h);
        const auto id = sample_vector(g, 3, [](const Point& x, std::span<double> o) {
            for (int a = 0; a < 3; ++a) o[a] = x[a];
        });
        CHECK(ball_energy(id, {}, r) == doctest::Approx(3.0 * 4.0 / 3.0 * std::numbers::pi * r * r * r).epsilon(0.02));
    }
    SUBCASE("x/|x| at r = 0.5") {
        const auto g = build_grid(ShapeSpec::ball(3, {}, 2.0), 1.0 / 32.0);
        CHECK(ball_energy(fixture_hedgehog(g), {}, 0.5) == doctest::Approx(8.0 * std::numbers::pi * 0.5).epsilon(0.05));
    }
    SUBCASE("radius below h is rejected") {
        const auto g = build_grid(ShapeSpec::ball(2, {}, 1.0), 0.1);
        CHECK_THROWS_AS(ball_energy(VectorField(g, 2), {}, 0.05), DomainError);
    }
    SUBCASE("ball covering the domain gives the total energy") {
        const auto g = build_grid(ShapeSpec::ball(2, {}, 1.0), 1.0 / 16.0);
        const auto u = sample_vector(g, 2, [](const Point& x, std::span<double> o) {
            o[0] = x[0] * x[1];
            o[1] = std::cos(x[0]);
        });
        CHECK(ball_energy(u, {}, 3.0) == doctest::Approx(dirichlet_energy(u)).epsilon(1e-12));
    }
    SUBCASE("nondecreasing in r") {
        const auto g = build_grid(ShapeSpec::ball(2, {}, 1.0), 1.0 / 16.0);
        const auto u = sample_vector(g, 1, [](const Point& x, std::span<double> o) { o[0] = std::sin(4 * x[0]) * x[1]; });
        double prev = 0.0;
        for (double r = 0.1; r < 1.0; r += 0.05) {
            const double e = ball_energy(u, {0.1, 0.0, 0.0}, r);
            CHECK(e >= prev);
            prev = e;
        }
    }
}
