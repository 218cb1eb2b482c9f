#include "fblab/specialfunc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fblab/error.hpp"

namespace fblab {

namespace {

/// P_n and P_{n-1} at x.
std::pair<double, double> legendre_pair(int n, double x) {
    double p0 = 1.0;
    double p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return {p1, p0};
}

}  // namespace

double legendre_eval(int n, double x) {
    if (n < 0) throw DomainError("Legendre order must be >= 0");
    return legendre_pair(n, x).first;
}

double legendre_derivative(int n, double x) {
    if (n < 0) throw DomainError("Legendre order must be >= 0");
    if (n == 0) return 0.0;
    if (std::abs(x) == 1.0) {
        const double v = 0.5 * n * (n + 1.0);
        return (x > 0.0 || n % 2 == 1) ? v : -v;
    }
    const auto [pn, pm] = legendre_pair(n, x);
    return n * (x * pn - pm) / (x * x - 1.0);
}

LegendreTable legendre_zeros(int n) {
    if (n < 1 || n > 100) throw DomainError("Legendre zeros are provided for 1 <= n <= 100");
    LegendreTable t;
    t.order = n;
    std::vector<double> upper;
    const int half = n / 2;
    for (int i = 1; i <= half; ++i) {
        double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        bool done = false;
        for (int it = 0; it < 40; ++it) {
            const double dx = legendre_eval(n, x) / legendre_derivative(n, x);
            x -= dx;
            if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) {
                done = true;
                break;
            }
        }
        if (!done && std::abs(legendre_eval(n, x)) > 1e-14) {
            throw ConvergenceError("Newton iteration for a Legendre zero did not converge", legendre_eval(n, x), 40);
        }
        upper.push_back(x);
    }
    for (double x : upper) t.zeros.push_back(-x);
    if (n % 2 == 1) t.zeros.push_back(0.0);
    for (double x : upper) t.zeros.push_back(x);
    std::sort(t.zeros.begin(), t.zeros.end());
    return t;
}

double nearest_legendre_zero(int n, double x) {
    const LegendreTable t = legendre_zeros(n);
    return *std::min_element(t.zeros.begin(), t.zeros.end(),
                             [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
}

}  // namespace fblab
