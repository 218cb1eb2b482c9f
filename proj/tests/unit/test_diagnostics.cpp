#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fblab/diagnostics.hpp"
#include "fblab/error.hpp"
#include "fblab/operators.hpp"

using namespace fblab;

namespace {

constexpr double kPi = std::numbers::pi;

VectorField identity3(const GridPtr& g) {
    return sample_vector(g, 3, [](const Point& x, std::span<double> o) {
        for (int a = 0; a < 3; ++a) o[a] = x[a];
    });
}

}  // namespace

TEST_CASE("rescaled energy of x/|x| is 8 pi at every radius") {
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.25), 1.0 / 48.0);
    const auto u = fixture_hedgehog(g);
    const std::vector<double> radii{0.5, 1.0};
    const auto rep = rescaled_energy(u, {}, radii);
    REQUIRE(rep.energies.size() == 2);
    // integral of 2/rho^2 over B_r is 8 pi r; lattice deficit is O(h/r).
    for (double e : rep.energies) CHECK(e == doctest::Approx(8 * kPi).epsilon(0.05));
    CHECK(rep.monotone);
}

TEST_CASE("rescaled energy of a constant and of the identity") {
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), 1.0 / 16.0);
    const std::vector<double> radii{0.25, 0.5, 0.75};
    const auto c = rescaled_energy(VectorField(g, 3, 1.0), {}, radii);
    for (double e : c.energies) CHECK(e == 0.0);
    const auto id = rescaled_energy(identity3(g), {}, radii);
    REQUIRE(id.energies.size() == 3);
    // |Du|^2 = 3, so r^-1 * 3 * (4/3) pi r^3 / 2 ... with the 1/2 in the density: 2 pi r^2.
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = radii[i];
        CHECK(id.energies[i] == doctest::Approx(3.0 * (4.0 / 3.0) * kPi * r * r * r / r).epsilon(0.1));
    }
    CHECK(id.energies[0] < id.energies[1]);
    CHECK(id.energies[1] < id.energies[2]);
    CHECK(id.monotone);
}

TEST_CASE("rescaled energy radius handling") {
    const auto g = build_grid(ShapeSpec::ball(2, {}, 1.0), 1.0 / 16.0);
    const VectorField u(g, 2, 0.0);
    const std::vector<double> unsorted{0.5, 0.25};
    CHECK_THROWS_AS(rescaled_energy(u, {}, unsorted), DomainError);
    const std::vector<double> tiny{1.0 / 64.0};
    CHECK_THROWS_AS(rescaled_energy(u, {}, tiny), DomainError);
    const std::vector<double> big{0.25, 2.0};
    const auto rep = rescaled_energy(u, {}, big);
    CHECK(rep.energies.size() == 1);
    CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("monotonicity violations are reported") {
    // Energy concentrated in a thin shell at 0.3 makes E(r) = r^-1 * const fall off past it.
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), 1.0 / 16.0);
    const auto u = sample_vector(g, 1, [](const Point& x, std::span<double> o) {
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        o[0] = r < 0.3 ? 0.0 : 1.0;
    });
    const std::vector<double> radii{0.25, 0.5, 0.75};
    const auto rep = rescaled_energy(u, {}, radii);
    CHECK_FALSE(rep.monotone);
    CHECK(rep.violations.size() >= 1);
}

TEST_CASE("smooth maps have no discontinuity candidates") {
    const auto g = build_grid(ShapeSpec::box(2, {-1, -1, 0}, {1, 1, 0}), 1.0 / 32.0);
    const auto rep = detect_discontinuities(fixture_uk(3, g));
    CHECK(rep.discontinuities.empty());
}

TEST_CASE("x/|x| is flagged at its singular point") {
    const double h = 1.0 / 16.0;
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), h);
    const auto rep = detect_discontinuities(fixture_hedgehog(g));
    REQUIRE(rep.discontinuities.size() >= 1);
    for (const auto& c : rep.discontinuities) {
        const Point& p = c.position;
        CHECK(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) <= 1.5 * h);
    }
}

TEST_CASE("an off-lattice singularity yields the surrounding ring") {
    const double h = 1.0 / 16.0;
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), h);
    const Point c{h / 2, h / 2, h / 2};
    const auto rep = detect_discontinuities(fixture_hedgehog(g, c));
    CHECK(rep.discontinuities.size() == 8);
    for (const auto& d : rep.discontinuities)
        for (int a = 0; a < 3; ++a) CHECK(std::abs(d.position[a] - c[a]) == doctest::Approx(h / 2));
}

TEST_CASE("branch points of u_2 and of the identity") {
    const double h = 1.0 / 32.0;
    const auto g = build_grid(ShapeSpec::box(2, {-0.5, -0.5, 0}, {0.5, 0.5, 0}), h);
    const auto b = detect_branch_points(fixture_uk(2, g), h / 2);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == g->nearest_node({0, 0, 0}));
    const auto id = sample_vector(g, 2, [](const Point& x, std::span<double> o) {
        o[0] = x[0];
        o[1] = x[1];
    });
    CHECK(detect_branch_points(id, h / 2).empty());
}

TEST_CASE("distance diagnostics of a map on the obstacle boundary") {
    const auto g = build_grid(ShapeSpec::annulus(3, {}, 0.5, 1.0), 1.0 / 16.0);
    const auto rep = distance_diagnostics(fixture_hedgehog(g), ConvexBody::ball(3, {}, 1.0));
    for (std::size_t n = 0; n < g->size(); ++n) {
        if (!g->active(n)) continue;
        CHECK(std::abs(rep.d[n]) <= 1e-12);
        CHECK(std::abs(rep.defect[n]) <= 1e-9);
    }
    REQUIRE_FALSE(rep.modulus.empty());
    CHECK(rep.modulus[0].step == 1);
    CHECK(rep.modulus[0].omega_d <= 1e-12);
    CHECK(rep.modulus[0].omega_u > 0.0);
}

TEST_CASE("distance to a ball grows linearly") {
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), 1.0 / 8.0);
    const auto rep = distance_diagnostics(identity3(g), ConvexBody::ball(3, {}, 0.25));
    const std::size_t n = g->nearest_node({0.75, 0, 0});
    CHECK(rep.d[n] == doctest::Approx(0.5));
    CHECK(rep.d[g->nearest_node({0, 0, 0})] == 0.0);
}

TEST_CASE("degeneracy field") {
    SUBCASE("half-space has zero curvature") {
        const auto g = build_grid(ShapeSpec::box(2, {-1, -1, 0}, {1, 1, 0}), 1.0 / 16.0);
        const auto u = sample_vector(g, 2, [](const Point& x, std::span<double> o) {
            o[0] = x[0];
            o[1] = 2.0 + x[1];
        });
        const auto F = degeneracy_field(u, ConvexBody::half_space(2, {}, {0, 1, 0}));
        for (std::size_t n : g->interior_nodes()) CHECK(std::abs(F[n]) <= 1e-12);
    }
    SUBCASE("x/|x| on a sphere gives 2 / rho^2") {
        const double h = 1.0 / 32.0;
        const auto g = build_grid(ShapeSpec::annulus(3, {}, 0.5, 1.0), h);
        const auto F = degeneracy_field(fixture_hedgehog(g), ConvexBody::ball(3, {}, 1.0));
        double worst = 0.0;
        for (std::size_t n : g->interior_nodes()) {
            const Point x = g->position(n);
            const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            worst = std::max(worst, std::abs(F[n] * r2 / 2.0 - 1.0));
        }
        CHECK(worst <= 0.05);
    }
    SUBCASE("u_2 with an offset ball vanishes at the branch point") {
        const auto g = build_grid(ShapeSpec::box(2, {-0.5, -0.5, 0}, {0.5, 0.5, 0}), 1.0 / 32.0);
        const auto F = degeneracy_field(fixture_uk(2, g), ConvexBody::ball(3, {0, 0, -1}, 1.0));
        CHECK(std::abs(F[g->nearest_node({0, 0, 0})]) <= 1e-12);
    }
}

TEST_CASE("oscillation, jump and antipodal jump") {
    const double h = 1.0 / 16.0;
    const auto g = build_grid(ShapeSpec::ball(3, {}, 1.0), h);
    const auto s = sample_scalar(g, [](const Point& x) { return x[0]; });
    CHECK(local_oscillation(s, {}, 0.25) == doctest::Approx(0.5));
    const auto id = identity3(g);
    CHECK(local_jump(id, {}, 0.5) == doctest::Approx(h));
    CHECK(antipodal_jump(fixture_hedgehog(g), {}, 2 * h) == doctest::Approx(2.0));
    CHECK(antipodal_jump(VectorField(g, 3, 1.0), {}, 2 * h) == doctest::Approx(0.0));
}

TEST_CASE("distance to the free boundary") {
    const auto g = build_grid(ShapeSpec::box(2, {-1, -1, 0}, {1, 1, 0}), 0.25);
    std::vector<std::uint8_t> mask(g->size(), 0);
    for (std::size_t n = 0; n < g->size(); ++n)
        if (g->active(n) && g->position(n)[0] < 0.1) mask[n] = 1;
    const auto rep = contact_report_from_mask(g, mask, {}, false);
    CHECK(distance_to_free_boundary(rep, {0.125, 0.5, 0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(distance_to_free_boundary(rep, {0.625, 0.5, 0}) == doctest::Approx(0.5));
    const auto none = contact_report_from_mask(g, std::vector<std::uint8_t>(g->size(), 0), {}, false);
    CHECK(std::isinf(distance_to_free_boundary(none, {})));
}
