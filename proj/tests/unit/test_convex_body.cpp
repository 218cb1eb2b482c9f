#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fblab/convex_body.hpp"
#include "fblab/error.hpp"

using namespace fblab;

namespace {

double dist(const Vec& a, const Vec& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

std::vector<ConvexBody> bodies() {
    return {ConvexBody::ball(3, {0.1, -0.2, 0.3}, 1.2), ConvexBody::ellipsoid(3, {0, 0, 0}, {1.0, 2.0, 3.0}),
            ConvexBody::slab_capped_ball(3, {0, 0, 0}, 1.0, 0.5), ConvexBody::half_space(3, {0, 0, 0.5}, {0, 0, 1})};
}

/// Brute-force nearest boundary point of the slab-capped ball: the best of
/// the sphere zone, the two discs and the two edge circles.
Vec slab_oracle(const Vec& p, double R, double w) {
    std::vector<Vec> cands;
    const double rxy = std::hypot(p[0], p[1]);
    const double ex = rxy > 0 ? p[0] / rxy : 1.0, ey = rxy > 0 ? p[1] / rxy : 0.0;
    const double rd = std::sqrt(R * R - w * w);
    for (double s : {-1.0, 1.0}) {
        const double r = std::min(rxy, rd);
        cands.push_back({r * ex, r * ey, s * w});
        cands.push_back({rd * ex, rd * ey, s * w});
    }
    const double n = dist(p, {0, 0, 0});
    if (n > 0 && std::abs(p[2] / n * R) <= w) cands.push_back({p[0] / n * R, p[1] / n * R, p[2] / n * R});
    Vec best = cands[0];
    for (const auto& c : cands) {
        if (dist(c, p) < dist(best, p)) best = c;
    }
    return best;
}

}  // namespace

TEST_CASE("signed distance sign convention") {
    const auto b = ConvexBody::ball(3, {}, 1.0);
    CHECK(b.signed_distance({2, 0, 0}) == doctest::Approx(1.0));
    CHECK(b.signed_distance({0, 0, 0}) == doctest::Approx(-1.0));
    const auto hs = ConvexBody::half_space(3, {0, 0, 0.5}, {0, 0, 1});
    CHECK(hs.signed_distance({0.3, -2.0, 0.75}) == doctest::Approx(0.25));
    CHECK(hs.signed_distance({0.0, 0.0, 0.0}) == doctest::Approx(-0.5));
}

TEST_CASE("degenerate parameters are rejected") {
    CHECK_THROWS_AS(ConvexBody::ball(3, {}, -1.0), DomainError);
    CHECK_THROWS_AS(ConvexBody::slab_capped_ball(3, {}, 1.0, 1.5), DomainError);
    CHECK_THROWS_AS(ConvexBody::half_space(3, {}, {0, 0, 0}), DomainError);
}

TEST_CASE("project_out") {
    const auto b = ConvexBody::ball(3, {}, 1.0);
    const auto p = b.project_out({0.5, 0, 0});
    CHECK(p.point[0] == doctest::Approx(1.0));
    CHECK(p.point[1] == doctest::Approx(0.0));
    const Vec out{1.2, 1.6, 0.0};
    CHECK(b.project_out(out).point == out);
    const auto tie = b.project_out({0, 0, 0});
    CHECK(tie.tie);
    CHECK(tie.point[0] == doctest::Approx(1.0));

    const auto s = ConvexBody::slab_capped_ball(3, {}, 1.0, 0.5);
    const auto q = s.project_out({0.1, 0.1, 0.45}).point;
    CHECK(q[0] == doctest::Approx(0.1));
    CHECK(q[1] == doctest::Approx(0.1));
    CHECK(q[2] == doctest::Approx(0.5));
}

TEST_CASE("slab projection matches the brute-force face oracle") {
    const auto s = ConvexBody::slab_capped_ball(3, {}, 1.0, 0.5);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int i = 0; i < 500; ++i) {
        const Vec p{U(rng), U(rng), U(rng)};
        const Vec q = s.nearest_boundary_point(p).point;
        const Vec o = slab_oracle(p, 1.0, 0.5);
        CHECK(dist(p, q) == doctest::Approx(dist(p, o)).epsilon(1e-9));
    }
}

TEST_CASE("projection invariants") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const auto& b : bodies()) {
        for (int i = 0; i < 300; ++i) {
            const Vec p{U(rng), U(rng), U(rng)};
            const auto q = b.project_out(p);
            CHECK(b.signed_distance(q.point) >= -1e-8);
            const auto qq = b.project_out(q.point);
            CHECK(dist(qq.point, q.point) <= 1e-10);
            if (b.signed_distance(p) >= 0) {
                CHECK(q.point == p);
            } else if (!q.tie) {
                CHECK(std::abs(b.signed_distance(q.point)) <= 1e-8);
                CHECK(dist(q.point, p) == doctest::Approx(-b.signed_distance(p)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("convexity by midpoints of boundary samples") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const auto& b : bodies()) {
        for (int i = 0; i < 200; ++i) {
            const Vec a = b.nearest_boundary_point({U(rng), U(rng), U(rng)}).point;
            const Vec c = b.nearest_boundary_point({U(rng), U(rng), U(rng)}).point;
            const Vec mid{(a[0] + c[0]) / 2, (a[1] + c[1]) / 2, (a[2] + c[2]) / 2};
            CHECK(b.signed_distance(mid) <= 1e-8);
        }
    }
}

TEST_CASE("signed distance has unit gradient off the boundary") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    const double e = 1e-6;
    for (const auto& b : bodies()) {
        int tested = 0;
        for (int i = 0; i < 400 && tested < 100; ++i) {
            const Vec p{U(rng), U(rng), U(rng)};
            if (std::abs(b.signed_distance(p)) < 0.05 || b.signed_distance(p) < 0) continue;
            double g2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                Vec pp = p, pm = p;
                pp[a] += e;
                pm[a] -= e;
                const double d = (b.signed_distance(pp) - b.signed_distance(pm)) / (2 * e);
                g2 += d * d;
            }
            CHECK(std::sqrt(g2) == doctest::Approx(1.0).epsilon(1e-3));
            ++tested;
        }
    }
}

TEST_CASE("distance Hessian quadratic form") {
    const auto b = ConvexBody::ball(2, {}, 1.0);
    const double radial[2] = {1.0, 0.0};
    const double tangential[2] = {0.0, 1.0};
    CHECK(std::abs(b.distance_hessian_quadform({2, 0, 0}, radial, 1)) < 1e-12);
    CHECK(b.distance_hessian_quadform({2, 0, 0}, tangential, 1) == doctest::Approx(0.5));
    const auto hs = ConvexBody::half_space(2, {}, {0, 1, 0});
    const double G[4] = {0.3, -1.0, 2.0, 0.5};
    CHECK(hs.distance_hessian_quadform({0.4, 2.0, 0}, G, 2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(b.distance_hessian_quadform({0.5, 0, 0}, tangential, 1), DomainError);
}

TEST_CASE("ball Hessian agrees with finite differences of the signed distance") {
    const auto b = ConvexBody::ball(3, {0.2, 0.0, -0.1}, 0.8);
    const Vec y{1.1, 0.7, 0.4};
    double H[9];
    b.distance_hessian(y, H);
    const double e = 1e-4;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            auto f = [&](double si, double sj) {
                Vec p = y;
                p[i] += si * e;
                p[j] += sj * e;
                return b.signed_distance(p);
            };
            const double fd = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * e * e);
            CHECK(std::abs(fd - H[3 * i + j]) <= 1e-4);
        }
    }
}

TEST_CASE("Hessian quadratic form is nonnegative for convex bodies") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const auto& b : bodies()) {
        for (int i = 0; i < 100; ++i) {
            const Vec y{U(rng), U(rng), U(rng)};
            if (b.signed_distance(y) < 1e-3) continue;
            double G[6];
            for (double& g : G) g = U(rng);
            CHECK(b.distance_hessian_quadform(y, G, 2) >= -1e-8);
        }
    }
}

TEST_CASE("flat witness") {
    const auto ball = ConvexBody::ball(3, {}, 1.0);
    const auto ell = ConvexBody::ellipsoid(3, {}, {1.0, 2.0, 3.0});
    const auto slab = ConvexBody::slab_capped_ball(3, {}, 1.0, 0.5);
    for (const Vec& y : {Vec{2, 0, 0}, Vec{0, 0, 2}, Vec{1, 1, 1}, Vec{0.1, 0.2, 0.8}}) {
        CHECK_FALSE(ball.flat_witness(y));
        CHECK_FALSE(ell.flat_witness(y));
    }
    CHECK(slab.flat_witness({0.1, 0.2, 0.8}));
    CHECK(slab.flat_witness({-0.3, 0.1, -0.7}));
    CHECK_FALSE(slab.flat_witness({1.5, 0.0, 0.0}));
}
