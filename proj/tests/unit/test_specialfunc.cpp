#include <doctest.h>

#include <cmath>

#include "fblab/error.hpp"
#include "fblab/specialfunc.hpp"

using namespace fblab;

TEST_CASE("Legendre values") {
    for (int n = 0; n <= 50; ++n) CHECK(legendre_eval(n, 1.0) == doctest::Approx(1.0));
    CHECK(legendre_eval(3, 0.5) == doctest::Approx(-0.4375));
    CHECK(std::abs(legendre_eval(5, 0.9061798)) <= 1e-6);
    for (int n = 0; n <= 20; ++n) {
        for (double x = -1.0; x <= 1.0; x += 0.01) CHECK(std::abs(legendre_eval(n, x)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("Legendre derivative matches the closed form and the endpoint limit") {
    // P_3' = (15 x^2 - 3) / 2
    CHECK(legendre_derivative(3, 0.3) == doctest::Approx((15 * 0.09 - 3) / 2));
    for (int n = 1; n <= 10; ++n) {
        CHECK(legendre_derivative(n, 1.0) == doctest::Approx(n * (n + 1) / 2.0));
        CHECK(legendre_derivative(n, -1.0) == doctest::Approx(std::pow(-1.0, n + 1) * n * (n + 1) / 2.0));
    }
}

TEST_CASE("Legendre zeros: closed forms") {
    CHECK(legendre_zeros(1).zeros == std::vector<double>{0.0});
    const auto z3 = legendre_zeros(3).zeros;
    REQUIRE(z3.size() == 3);
    CHECK(z3[0] == doctest::Approx(-std::sqrt(0.6)).epsilon(1e-12));
    CHECK(z3[1] == 0.0);
    CHECK(z3[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-12));
    // x^2 = (35 -+ 2 sqrt 70) / 63
    const auto z5 = legendre_zeros(5).zeros;
    REQUIRE(z5.size() == 5);
    const double a = std::sqrt((35 - 2 * std::sqrt(70.0)) / 63), b = std::sqrt((35 + 2 * std::sqrt(70.0)) / 63);
    CHECK(std::abs(z5[4] - b) <= 1e-6);
    CHECK(std::abs(z5[3] - a) <= 1e-6);
    CHECK(z5[2] == 0.0);
    CHECK(std::abs(z5[4] - 0.906180) <= 1e-6);
    CHECK(std::abs(z5[3] - 0.538469) <= 1e-6);
}

TEST_CASE("Legendre zeros: residual, symmetry, interlacing") {
    std::vector<double> prev;
    for (int n = 1; n <= 51; ++n) {
        const auto z = legendre_zeros(n).zeros;
        REQUIRE(z.size() == static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < z.size(); ++i) {
            CHECK(std::abs(legendre_eval(n, z[i])) <= 1e-12);
            CHECK(z[i] == -z[z.size() - 1 - i]);
            if (i) CHECK(z[i] > z[i - 1]);
        }
        if (!prev.empty()) {
            for (std::size_t i = 0; i < prev.size(); ++i) CHECK((z[i] < prev[i] && prev[i] < z[i + 1]));
        }
        prev = z;
    }
}

TEST_CASE("Legendre zeros: order limits and nearest zero") {
    CHECK_THROWS_AS(legendre_zeros(0), DomainError);
    CHECK_THROWS_AS(legendre_zeros(101), DomainError);
    CHECK(legendre_zeros(100).zeros.size() == 100);
    CHECK(nearest_legendre_zero(3, 0.7) == doctest::Approx(std::sqrt(0.6)));
    CHECK(nearest_legendre_zero(3, 0.1) == 0.0);
}
