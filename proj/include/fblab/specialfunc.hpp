#pragma once

#include <vector>

namespace fblab {

/// P_n(x) by the three-term recurrence.
double legendre_eval(int n, double x);

/// P_n'(x); the endpoint limit n(n+1)/2 * (+-1)^(n+1) is used at |x| = 1.
double legendre_derivative(int n, double x);

struct LegendreTable {
    int order = 0;
    /// Ascending; exactly order entries.
    std::vector<double> zeros;
};

/// Newton iteration from cos(pi (i - 1/4) / (n + 1/2)). Zeros are symmetrised
/// (z_i = -z_{n+1-i}, and 0 exactly for odd n). Throws DomainError for n
/// outside [1, 100] and ConvergenceError when Newton stalls after 40 steps.
LegendreTable legendre_zeros(int n);

/// Zero of P_n nearest to x.
double nearest_legendre_zero(int n, double x);

}  // namespace fblab
