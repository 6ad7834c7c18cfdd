#include "pgmt/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace pgmt {

namespace {

void check_finite(const Point& x)
{
    for (double v : x.h) {
        if (!std::isfinite(v)) throw std::invalid_argument("point coordinate is not finite");
    }
    if (!std::isfinite(x.t)) throw std::invalid_argument("point time coordinate is not finite");
}

void check_same_dim(const Point& a, const Point& b)
{
    if (a.h.size() != b.h.size()) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a.h.size()) + " vs " +
                                    std::to_string(b.h.size()));
    }
}

} // namespace

Point::Point(std::vector<double> h_, double t_) : h(std::move(h_)), t(t_)
{
    if (h.empty()) throw std::invalid_argument("Point needs n >= 1 horizontal coordinates");
    check_finite(*this);
}

Point Point::origin(int n)
{
    if (n < 1) throw std::invalid_argument("Point needs n >= 1");
    return Point(std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.0);
}

std::string to_string(Metric m)
{
    return m == Metric::Koranyi ? "koranyi" : "box";
}

Metric metric_from_string(const std::string& s)
{
    if (s == "koranyi" || s == "Koranyi") return Metric::Koranyi;
    if (s == "box" || s == "BoxInf" || s == "boxinf") return Metric::BoxInf;
    throw std::invalid_argument("unknown metric '" + s + "'");
}

Point add(const Point& a, const Point& b)
{
    check_same_dim(a, b);
    Point r = a;
    for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] += b.h[i];
    r.t += b.t;
    return r;
}

Point sub(const Point& a, const Point& b)
{
    check_same_dim(a, b);
    Point r = a;
    for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] -= b.h[i];
    r.t -= b.t;
    return r;
}

Point dilate(const Point& x, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("dilation factor must be positive");
    }
    Point r = x;
    for (double& v : r.h) v *= lambda;
    r.t *= lambda * lambda;
    return r;
}

double norm(const Point& x, Metric m)
{
    return hom_norm(norm2(x.h), x.t, m);
}

double distance(const Point& x, const Point& y, Metric m)
{
    check_same_dim(x, y);
    double h2 = 0.0;
    for (std::size_t i = 0; i < x.h.size(); ++i) {
        const double d = y.h[i] - x.h[i];
        h2 += d * d;
    }
    return hom_norm(h2, y.t - x.t, m);
}

double distance_raw(const double* a, const double* b, int n, Metric m)
{
    double h2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = b[i] - a[i];
        h2 += d * d;
    }
    return hom_norm(h2, b[n] - a[n], m);
}

double boundary_distance(const Point& g, const Point& x, double r, Metric m)
{
    check_same_dim(g, x);
    double a2 = 0.0;
    for (std::size_t i = 0; i < g.h.size(); ++i) {
        const double d = g.h[i] - x.h[i];
        a2 += d * d;
    }
    const double a = std::sqrt(a2);
    const double tau = std::abs(g.t - x.t);
    if (hom_norm(a2, tau, m) >= r) return 0.0;

    if (m == Metric::BoxInf) {
        return std::min(r - a, std::sqrt(r * r - tau));
    }

    // Closest point of the sphere |z_H|^4 + z_T^2 = r^4: align z_H with g_H and
    // z_T with g_T, leaving a one-dimensional search over rho = |z_H - x_H|.
    const double r4 = r * r * r * r;
    auto phi = [&](double rho) {
        const double dh = rho - a;
        const double dt = std::sqrt(std::max(0.0, r4 - rho * rho * rho * rho)) - tau;
        return dh * dh * dh * dh + dt * dt;
    };
    const int grid = 256;
    int best = 0;
    double best_val = phi(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double v = phi(r * i / grid);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double lo = r * std::max(0, best - 1) / grid;
    double hi = r * std::min(grid, best + 1) / grid;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = hi - gr * (hi - lo);
    double c2 = lo + gr * (hi - lo);
    double f1 = phi(c1);
    double f2 = phi(c2);
    for (int it = 0; it < 80 && hi - lo > 1e-15 * r; ++it) {
        if (f1 < f2) {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = phi(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = phi(c2);
        }
    }
    best_val = std::min({best_val, f1, f2});
    return std::sqrt(std::sqrt(best_val));
}

HomSubgroup::HomSubgroup(int n_, std::vector<std::vector<double>> basis_, bool vertical)
    : n(n_), basis(std::move(basis_)), includes_vertical(vertical)
{
    if (n < 1) throw std::invalid_argument("HomSubgroup needs n >= 1");
    if (static_cast<int>(basis.size()) > n) throw std::invalid_argument("too many basis vectors");
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (static_cast<int>(basis[i].size()) != n) throw std::invalid_argument("basis vector has wrong length");
        for (std::size_t j = 0; j <= i; ++j) {
            const double expect = i == j ? 1.0 : 0.0;
            if (std::abs(dot(basis[i], basis[j]) - expect) > 1e-10) {
                throw std::invalid_argument("HomSubgroup basis is not orthonormal");
            }
        }
    }
}

int HomSubgroup::homogeneous_dimension() const
{
    return static_cast<int>(basis.size()) + (includes_vertical ? 2 : 0);
}

std::pair<int, int> stratification(const HomSubgroup& V)
{
    return {static_cast<int>(V.basis.size()), V.includes_vertical ? 1 : 0};
}

VerticalHyperplane::VerticalHyperplane(std::vector<double> u, double c) : normal(std::move(u)), offset(c)
{
    if (normal.empty()) throw std::invalid_argument("VerticalHyperplane needs n >= 1");
    const double len = std::sqrt(norm2(normal));
    if (std::abs(len - 1.0) > 1e-10) throw std::invalid_argument("VerticalHyperplane normal must be a unit vector");
    if (!std::isfinite(offset)) throw std::invalid_argument("VerticalHyperplane offset must be finite");
}

double plane_distance(const Point& x, const VerticalHyperplane& V, Metric /*m*/)
{
    if (x.h.size() != V.normal.size()) throw std::invalid_argument("dimension mismatch in plane_distance");
    // The nearest plane point shares x's time coordinate, so both metrics reduce
    // to the Euclidean horizontal distance.
    return std::abs(dot(V.normal, x.h) - V.offset);
}

std::vector<std::vector<double>> orthonormal_complement(const std::vector<double>& u)
{
    const int n = static_cast<int>(u.size());
    Eigen::MatrixXd A(n, 1);
    for (int i = 0; i < n; ++i) A(i, 0) = u[i];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    std::vector<std::vector<double>> out;
    for (int j = 1; j < n; ++j) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = Q(i, j);
        out.push_back(std::move(col));
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a)
{
    return dot(a, a);
}

double sphere_area(int k)
{
    if (k < 0) throw std::invalid_argument("sphere dimension must be >= 0");
    const double m = 0.5 * (k + 1);
    return 2.0 * std::pow(M_PI, m) / std::tgamma(m);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn)
{
    if (jobs <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace pgmt
