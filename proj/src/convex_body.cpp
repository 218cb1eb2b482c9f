#include "fblab/convex_body.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fblab/error.hpp"

namespace fblab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double dist2(const Vec& a, const Vec& b, int m) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

Projection ball_nearest(const Ball& b, const Vec& p, int m) {
    const double r = std::sqrt(dist2(p, b.center, m));
    Projection out;
    out.point = b.center;
    if (r == 0.0) {
        out.point[0] += b.radius;
        out.tie = true;
        return out;
    }
    const double s = b.radius / r;
    for (int i = 0; i < m; ++i) out.point[i] = b.center[i] + s * (p[i] - b.center[i]);
    return out;
}

// Nearest point on the ellipsoid sum (x_i / e_i)^2 = 1 for z >= 0 with axes
// sorted so that e is non-increasing. Works for z inside or outside.
// Returns true when the choice was ambiguous (interior medial set).
bool ellipsoid_nearest_sorted(const double* e, const double* z, double* x, int k) {
    if (k == 1) {
        x[0] = e[0];
        return false;
    }
    const int last = k - 1;
    if (z[last] > 0.0) {
        // F(t) = sum (e_i z_i / (t + e_i^2))^2 - 1 is convex and decreasing on
        // (-e_last^2, inf); Newton from a point with F >= 0 converges monotonically.
        auto F = [&](double t, double& dF) {
            double f = -1.0;
            dF = 0.0;
            for (int i = 0; i < k; ++i) {
                if (z[i] == 0.0) continue;
                const double q = e[i] * z[i] / (t + e[i] * e[i]);
                f += q * q;
                dF -= 2.0 * q * q / (t + e[i] * e[i]);
            }
            return f;
        };
        double lo = -e[last] * e[last] + e[last] * z[last];
        double norm_ez = 0.0;
        for (int i = 0; i < k; ++i) norm_ez += (e[i] * z[i]) * (e[i] * z[i]);
        double hi = -e[last] * e[last] + std::sqrt(norm_ez);
        double t = lo;
        for (int it = 0; it < 100; ++it) {
            double dF = 0.0;
            const double f = F(t, dF);
            if (f == 0.0) break;
            if (f > 0.0) {
                lo = t;
            } else {
                hi = t;
            }
            double next = (dF < 0.0) ? t - f / dF : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) {
                t = next;
                break;
            }
            t = next;
        }
        for (int i = 0; i < k; ++i) x[i] = e[i] * e[i] * z[i] / (t + e[i] * e[i]);
        return false;
    }
    // z_last == 0: either the minor-axis branch (x_last > 0) or the problem
    // restricted to the hyperplane x_last = 0.
    double sum = 0.0;
    for (int i = 0; i < last; ++i) {
        const double denom = e[i] * e[i] - e[last] * e[last];
        const double xd = denom > 0.0 ? e[i] * z[i] / denom : 0.0;
        x[i] = e[i] * xd;
        sum += xd * xd;
    }
    if (sum < 1.0) {
        x[last] = e[last] * std::sqrt(1.0 - sum);
        return true;
    }
    x[last] = 0.0;
    return ellipsoid_nearest_sorted(e, z, x, last);
}

Projection ellipsoid_nearest(const Ellipsoid& el, const Vec& p, int m) {
    std::array<int, 3> order{0, 1, 2};
    std::array<double, 3> zabs{};
    for (int i = 0; i < m; ++i) zabs[i] = std::abs(p[i] - el.center[i]);
    std::sort(order.begin(), order.begin() + m, [&](int a, int b) {
        if (el.semi_axes[a] != el.semi_axes[b]) return el.semi_axes[a] > el.semi_axes[b];
        if (zabs[a] != zabs[b]) return zabs[a] < zabs[b];
        return a < b;
    });
    std::array<double, 3> e{}, z{}, x{};
    for (int i = 0; i < m; ++i) {
        e[i] = el.semi_axes[order[i]];
        z[i] = zabs[order[i]];
    }
    Projection out;
    const bool ambiguous = ellipsoid_nearest_sorted(e.data(), z.data(), x.data(), m);
    out.point = el.center;
    for (int i = 0; i < m; ++i) {
        const int axis = order[i];
        const double sign = (p[axis] - el.center[axis]) < 0.0 ? -1.0 : 1.0;
        out.point[axis] = el.center[axis] + sign * x[i];
    }
    out.tie = ambiguous && x[m - 1] > 0.0;
    return out;
}

Projection slab_nearest(const SlabCappedBall& s, const Vec& p, int m) {
    const int zaxis = m - 1;
    const double a2 = s.radius * s.radius - s.half_width * s.half_width;
    const double a = std::sqrt(a2);
    double rho2 = 0.0;
    for (int i = 0; i < zaxis; ++i) rho2 += (p[i] - s.center[i]) * (p[i] - s.center[i]);
    const double rho = std::sqrt(rho2);
    const double top = s.center[zaxis] + s.half_width;
    const double bottom = s.center[zaxis] - s.half_width;

    Projection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    bool tie = false;
    auto consider = [&](const Vec& q, bool ambiguous) {
        const double d2 = dist2(p, q, m);
        const double eps = std::isfinite(best_d2) ? 1e-24 + 1e-14 * best_d2 : 0.0;
        if (d2 < best_d2 - eps) {
            best_d2 = d2;
            best.point = q;
            tie = ambiguous;
        } else if (std::abs(d2 - best_d2) <= eps && dist2(q, best.point, m) > 1e-20) {
            tie = true;
        }
    };
    // Discs first so that exact ties with the edge or zone resolve toward the disc.
    const bool nearer_top = p[zaxis] >= s.center[zaxis];
    for (double level : nearer_top ? std::array<double, 2>{top, bottom} : std::array<double, 2>{bottom, top}) {
        if (rho2 <= a2) {
            Vec q = p;
            q[zaxis] = level;
            consider(q, false);
        }
    }
    for (double level : nearer_top ? std::array<double, 2>{top, bottom} : std::array<double, 2>{bottom, top}) {
        Vec q = s.center;
        if (rho > 0.0) {
            for (int i = 0; i < zaxis; ++i) q[i] = s.center[i] + a * (p[i] - s.center[i]) / rho;
        } else {
            q[0] += a;
        }
        q[zaxis] = level;
        consider(q, rho == 0.0 && m > 1);
    }
    {
        const Projection zone = ball_nearest(Ball{s.center, s.radius}, p, m);
        if (std::abs(zone.point[zaxis] - s.center[zaxis]) <= s.half_width) consider(zone.point, zone.tie);
    }
    best.tie = tie;
    return best;
}

bool slab_inside(const SlabCappedBall& s, const Vec& p, int m) {
    return dist2(p, s.center, m) < s.radius * s.radius && std::abs(p[m - 1] - s.center[m - 1]) < s.half_width;
}

}  // namespace

ConvexBody::ConvexBody(int m, Shape shape) : m_(m), shape_(std::move(shape)) {
    if (m < 1 || m > 3) throw DomainError("convex body dimension must be 1, 2 or 3");
    std::visit(overloaded{
                   [&](Ball& b) {
                       if (!(b.radius > 0.0)) throw DomainError("ball radius must be positive");
                   },
                   [&](Ellipsoid& e) {
                       for (int i = 0; i < m; ++i) {
                           if (!(e.semi_axes[i] > 0.0)) throw DomainError("ellipsoid semi-axes must be positive");
                       }
                   },
                   [&](SlabCappedBall& s) {
                       if (m < 2) throw DomainError("slab-capped ball needs m >= 2");
                       if (!(s.radius > 0.0) || !(s.half_width > 0.0) || !(s.half_width < s.radius)) {
                           throw DomainError("slab-capped ball needs 0 < half_width < radius");
                       }
                   },
                   [&](HalfSpace& h) {
                       double n2 = 0.0;
                       for (int i = 0; i < m; ++i) n2 += h.normal[i] * h.normal[i];
                       if (!(n2 > 0.0)) throw DomainError("half-space normal must be nonzero");
                       const double inv = 1.0 / std::sqrt(n2);
                       for (int i = 0; i < m; ++i) h.normal[i] *= inv;
                   }},
               shape_);
}

std::string ConvexBody::kind() const {
    return std::visit(overloaded{[](const Ball&) { return std::string("ball"); },
                                 [](const Ellipsoid&) { return std::string("ellipsoid"); },
                                 [](const SlabCappedBall&) { return std::string("slab_capped_ball"); },
                                 [](const HalfSpace&) { return std::string("half_space"); }},
                      shape_);
}

double ConvexBody::diameter() const noexcept {
    return std::visit(overloaded{[](const Ball& b) { return 2.0 * b.radius; },
                                 [&](const Ellipsoid& e) {
                                     return 2.0 * *std::max_element(e.semi_axes.begin(), e.semi_axes.begin() + m_);
                                 },
                                 [](const SlabCappedBall& s) { return 2.0 * s.radius; },
                                 [](const HalfSpace&) { return 1.0; }},
                      shape_);
}

double ConvexBody::signed_distance(const Vec& p) const noexcept {
    return std::visit(overloaded{[&](const Ball& b) { return std::sqrt(dist2(p, b.center, m_)) - b.radius; },
                                 [&](const HalfSpace& h) {
                                     double s = 0.0;
                                     for (int i = 0; i < m_; ++i) s += (p[i] - h.point[i]) * h.normal[i];
                                     return s;
                                 },
                                 [&](const Ellipsoid& e) {
                                     double q = 0.0;
                                     for (int i = 0; i < m_; ++i) {
                                         const double t = (p[i] - e.center[i]) / e.semi_axes[i];
                                         q += t * t;
                                     }
                                     const double d = std::sqrt(dist2(p, ellipsoid_nearest(e, p, m_).point, m_));
                                     return q < 1.0 ? -d : d;
                                 },
                                 [&](const SlabCappedBall& s) {
                                     const double d = std::sqrt(dist2(p, slab_nearest(s, p, m_).point, m_));
                                     return slab_inside(s, p, m_) ? -d : d;
                                 }},
                      shape_);
}

Projection ConvexBody::nearest_boundary_point(const Vec& p) const noexcept {
    return std::visit(overloaded{[&](const Ball& b) { return ball_nearest(b, p, m_); },
                                 [&](const HalfSpace& h) {
                                     double s = 0.0;
                                     for (int i = 0; i < m_; ++i) s += (p[i] - h.point[i]) * h.normal[i];
                                     Projection out;
                                     out.point = p;
                                     for (int i = 0; i < m_; ++i) out.point[i] -= s * h.normal[i];
                                     return out;
                                 },
                                 [&](const Ellipsoid& e) { return ellipsoid_nearest(e, p, m_); },
                                 [&](const SlabCappedBall& s) { return slab_nearest(s, p, m_); }},
                      shape_);
}

Projection ConvexBody::project_out(const Vec& p) const noexcept {
    const bool inside = std::visit(overloaded{[&](const Ball& b) { return dist2(p, b.center, m_) < b.radius * b.radius; },
                                              [&](const HalfSpace& h) {
                                                  double s = 0.0;
                                                  for (int i = 0; i < m_; ++i) s += (p[i] - h.point[i]) * h.normal[i];
                                                  return s < 0.0;
                                              },
                                              [&](const Ellipsoid& e) {
                                                  double q = 0.0;
                                                  for (int i = 0; i < m_; ++i) {
                                                      const double t = (p[i] - e.center[i]) / e.semi_axes[i];
                                                      q += t * t;
                                                  }
                                                  return q < 1.0;
                                              },
                                              [&](const SlabCappedBall& s) { return slab_inside(s, p, m_); }},
                                   shape_);
    if (!inside) return Projection{p, false};
    return nearest_boundary_point(p);
}

Vec ConvexBody::outward_normal(const Vec& p) const noexcept {
    if (const auto* b = std::get_if<Ball>(&shape_)) {
        const Vec q = ball_nearest(*b, p, m_).point;
        Vec n{};
        for (int i = 0; i < m_; ++i) n[i] = (q[i] - b->center[i]) / b->radius;
        return n;
    }
    if (const auto* h = std::get_if<HalfSpace>(&shape_)) return h->normal;
    // Gradient of the signed distance at the nearest boundary point.
    const Vec q = nearest_boundary_point(p).point;
    const double eps = 1e-6 * diameter();
    Vec n{};
    double norm = 0.0;
    for (int i = 0; i < m_; ++i) {
        Vec a = q, b = q;
        a[i] += eps;
        b[i] -= eps;
        n[i] = (signed_distance(a) - signed_distance(b)) / (2.0 * eps);
        norm += n[i] * n[i];
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (int i = 0; i < m_; ++i) n[i] /= norm;
    }
    return n;
}

void ConvexBody::finite_difference_hessian(const Vec& y, std::span<double> out) const {
    const double eps = 1e-4 * diameter();
    const auto m = static_cast<std::size_t>(m_);
    for (int a = 0; a < m_; ++a) {
        for (int b = a; b < m_; ++b) {
            double v = 0.0;
            if (a == b) {
                Vec p = y, q = y;
                p[a] += eps;
                q[a] -= eps;
                v = (signed_distance(p) - 2.0 * signed_distance(y) + signed_distance(q)) / (eps * eps);
            } else {
                Vec pp = y, pm = y, mp = y, mm = y;
                pp[a] += eps, pp[b] += eps;
                pm[a] += eps, pm[b] -= eps;
                mp[a] -= eps, mp[b] += eps;
                mm[a] -= eps, mm[b] -= eps;
                v = (signed_distance(pp) - signed_distance(pm) - signed_distance(mp) + signed_distance(mm)) /
                    (4.0 * eps * eps);
            }
            out[static_cast<std::size_t>(a) * m + static_cast<std::size_t>(b)] = v;
            out[static_cast<std::size_t>(b) * m + static_cast<std::size_t>(a)] = v;
        }
    }
}

void ConvexBody::distance_hessian(const Vec& y, std::span<double> out) const {
    const auto m = static_cast<std::size_t>(m_);
    if (out.size() < m * m) throw DomainError("hessian output buffer too small");
    const double sd = signed_distance(y);
    if (sd < -1e-9 * std::max(1.0, diameter())) throw DomainError("distance Hessian requested strictly inside the obstacle");
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m * m), 0.0);
    if (std::holds_alternative<HalfSpace>(shape_)) return;
    if (const auto* b = std::get_if<Ball>(&shape_)) {
        const double r = std::sqrt(dist2(y, b->center, m_));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double yi = (y[i] - b->center[i]) / r;
                const double yj = (y[j] - b->center[j]) / r;
                out[i * m + j] = ((i == j ? 1.0 : 0.0) - yi * yj) / r;
            }
        }
        return;
    }
    finite_difference_hessian(y, out);
}

double ConvexBody::distance_hessian_quadform(const Vec& y, std::span<const double> G, int n) const {
    const auto m = static_cast<std::size_t>(m_);
    if (G.size() < m * static_cast<std::size_t>(n)) throw DomainError("G must hold m x n entries");
    if (std::holds_alternative<HalfSpace>(shape_)) {
        if (signed_distance(y) < -1e-9) throw DomainError("distance Hessian requested strictly inside the obstacle");
        return 0.0;
    }
    if (const auto* b = std::get_if<Ball>(&shape_)) {
        const double r = std::sqrt(dist2(y, b->center, m_));
        if (r - b->radius < -1e-9 * b->radius) throw DomainError("distance Hessian requested strictly inside the obstacle");
        double total = 0.0;
        for (int a = 0; a < n; ++a) {
            double g2 = 0.0, radial = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                const double g = G[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)];
                g2 += g * g;
                radial += g * (y[c] - b->center[c]) / r;
            }
            total += (g2 - radial * radial) / r;
        }
        return total;
    }
    std::array<double, 9> H{};
    distance_hessian(y, H);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < m; ++c) {
            for (std::size_t d = 0; d < m; ++d) {
                total += G[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] * H[c * m + d] *
                         G[d * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)];
            }
        }
    }
    return total;
}

bool ConvexBody::flat_witness(const Vec& y, double tol) const {
    if (std::holds_alternative<HalfSpace>(shape_)) return true;
    if (const auto* b = std::get_if<Ball>(&shape_)) return 1.0 / b->radius < tol;
    const Vec q = nearest_boundary_point(y).point;
    std::array<double, 9> H{};
    finite_difference_hessian(q, H);
    Eigen::MatrixXd M(m_, m_);
    for (int i = 0; i < m_; ++i) {
        for (int j = 0; j < m_; ++j) M(i, j) = H[static_cast<std::size_t>(i * m_ + j)];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff() < tol;
}

}  // namespace fblab
