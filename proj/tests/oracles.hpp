#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <functional>

namespace oracle {

// int_0^1 rho^{n-2} sqrt(1 - rho^4) d rho via the Beta function.
inline double flat_profile_integral(int n)
{
    return std::sqrt(M_PI) * std::tgamma((n - 1) / 4.0) / (8.0 * std::tgamma((n + 5) / 4.0));
}

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol)
{
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson_step(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 50);
}

} // namespace oracle

#include <Eigen/Dense>
#include <random>

namespace oracle {

// min over the unit sphere of u^T M u: 10^4-point grid followed by a shrinking pattern search.
inline double sphere_min_quadratic(const Eigen::MatrixXd& M)
{
    const int n = static_cast<int>(M.rows());
    auto f = [&](const Eigen::VectorXd& u) { return u.dot(M * u) / u.squaredNorm(); };
    Eigen::VectorXd best(n);
    double fb = 1e300;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd u(n);
        if (n == 2) {
            const double th = M_PI * i / 10000.0;
            u << std::cos(th), std::sin(th);
        } else {
            for (int j = 0; j < n; ++j) u[j] = nd(rng);
        }
        u.normalize();
        const double v = f(u);
        if (v < fb) {
            fb = v;
            best = u;
        }
    }
    for (double step = 0.05; step > 1e-12; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (int j = 0; j < n; ++j) {
                for (double sgn : {-1.0, 1.0}) {
                    Eigen::VectorXd u = best;
                    u[j] += sgn * step;
                    u.normalize();
                    const double v = f(u);
                    if (v < fb) {
                        fb = v;
                        best = u;
                        moved = true;
                    }
                }
            }
        }
    }
    return fb;
}

} // namespace oracle
