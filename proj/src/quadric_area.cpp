#include "pgmt/quadric_area.hpp"

#include "pgmt/core.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pgmt {

namespace {

constexpr double kDirectionTol = 1e-10;

std::vector<std::pair<Eigen::VectorXd, double>> v_nodes(const QuadricFrame& frame, const AreaOptions& opts)
{
    const int n = frame.n();
    const Eigen::MatrixXd& T = frame.tangent_basis();
    std::vector<std::pair<Eigen::VectorXd, double>> out;
    if (n == 2) {
        out.push_back({T.col(0), 1.0});
        out.push_back({-T.col(0), 1.0});
    } else if (n == 3) {
        const int m = std::max(4, opts.v_nodes);
        for (int k = 0; k < m; ++k) {
            const double phi = 2.0 * M_PI * k / m;
            out.push_back({std::cos(phi) * T.col(0) + std::sin(phi) * T.col(1), 2.0 * M_PI / m});
        }
    } else {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> nd;
        const int m = std::max(1, opts.mc_samples);
        const double w = sphere_area(n - 2) / m;
        for (int k = 0; k < m; ++k) {
            Eigen::VectorXd g(n - 1);
            for (int i = 0; i < n - 1; ++i) g[i] = nd(rng);
            out.push_back({T * g.normalized(), w});
        }
    }
    return out;
}

} // namespace

QuadricFrame::QuadricFrame(Eigen::MatrixXd D, Eigen::VectorXd x) : D_(std::move(D)), x_(std::move(x))
{
    const int n = static_cast<int>(x_.size());
    if (n < 2) throw std::invalid_argument("QuadricFrame: n must be >= 2");
    if (D_.rows() != n || D_.cols() != n) throw std::invalid_argument("QuadricFrame: D must be n x n");
    if ((D_ - D_.transpose()).norm() > 1e-12 * std::max(1.0, D_.norm())) throw std::invalid_argument("QuadricFrame: D must be symmetric");
    if (D_.norm() == 0.0) throw std::invalid_argument("QuadricFrame: D must be nonzero");
    const Eigen::VectorXd Dx = D_ * x_;
    if (Dx.norm() <= 1e-14 * D_.norm() * std::max(1.0, x_.norm())) throw std::invalid_argument("QuadricFrame: x lies in Ker D");
    normal_ = Dx.normalized();
    c_ = 2.0 * Dx.norm();
    alpha_ = normal_.dot(D_ * normal_);
    const auto comp = orthonormal_complement(std::vector<double>(normal_.data(), normal_.data() + n));
    tangent_.resize(n, n - 1);
    for (int j = 0; j < n - 1; ++j) {
        for (int i = 0; i < n; ++i) tangent_(i, j) = comp[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D_);
    const double tol = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(es.eigenvalues()[i]) > tol) {
            const double p = es.eigenvectors().col(i).dot(x_);
            d2 += p * p;
        }
    }
    critical_distance_ = std::sqrt(d2);
}

void QuadricFrame::check_direction(const Eigen::VectorXd& v) const
{
    if (v.size() != x_.size()) throw std::invalid_argument("direction has the wrong dimension");
    if (std::abs(v.norm() - 1.0) > kDirectionTol || std::abs(v.dot(normal_)) > kDirectionTol) {
        throw std::invalid_argument("direction must be a unit vector orthogonal to the normal");
    }
}

double G_function(const QuadricFrame& frame, const Eigen::VectorXd& w)
{
    const double w2 = w.squaredNorm();
    const double lin = frame.c() * frame.normal().dot(w) + w.dot(frame.D() * w);
    return w2 * w2 + lin * lin;
}

Eigen::VectorXd polar_point(const QuadricFrame& frame, double rho, double theta, const Eigen::VectorXd& v)
{
    return std::sin(theta) * rho * rho / frame.c() * frame.normal() + std::cos(theta) * rho * v;
}

double HCoefficients::H(double rho) const
{
    const double s = rho / c;
    return rho * rho * rho * rho * (A + s * (Bbar + s * (Cbar + s * (Dbar + s * Ebar))));
}

double HCoefficients::reduced_derivative(double rho) const
{
    const double s = rho / c;
    return 4.0 * A + s * (5.0 * Bbar + s * (6.0 * Cbar + s * (7.0 * Dbar + s * 8.0 * Ebar)));
}

HCoefficients h_coefficients(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v)
{
    frame.check_direction(v);
    const double s = std::sin(theta), co = std::cos(theta);
    const double a = frame.alpha(), b = frame.beta(v), g = frame.gamma(v);
    HCoefficients h;
    h.c = frame.c();
    h.A = co * co * co * co + std::pow(co * co * g + s, 2);
    h.Bbar = 4.0 * s * co * b * (co * co * g + s);
    h.Cbar = s * s * (co * co * (2.0 + 4.0 * b * b + 2.0 * g * a) + 2.0 * s * a);
    h.Dbar = 4.0 * a * b * s * s * s * co;
    h.Ebar = (1.0 + a * a) * s * s * s * s;
    return h;
}

double radius_solution(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v, double r)
{
    const HCoefficients h = h_coefficients(frame, theta, v);
    const double B = h.Bbar / h.c, C = h.Cbar / (h.c * h.c), A = h.A;
    return r / std::pow(A, 0.25) - B * r * r / (4.0 * std::pow(A, 1.5)) +
           (7.0 / 32.0 * B * B / std::pow(A, 2.75) - C / (4.0 * std::pow(A, 1.75))) * r * r * r;
}

double radius_exact(const HCoefficients& h, double r)
{
    if (!(r > 0.0)) throw std::invalid_argument("radius_exact: r must be positive");
    const double target = r * r * r * r;
    // march outward from the first-order guess until H exceeds r^4, checking H' > 0 on the way
    double step = r / std::pow(h.A, 0.25) / 16.0;
    double lo = 0.0, hi = step;
    for (int i = 0;; ++i) {
        if (i > 4096) throw std::domain_error("radius_exact: no bracket found");
        if (!(h.reduced_derivative(hi) > 0.0)) throw std::domain_error("radius_exact: H not monotone on the bracket");
        if (h.H(hi) > target) break;
        lo = hi;
        hi += step;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (!(h.reduced_derivative(mid) > 0.0)) throw std::domain_error("radius_exact: H not monotone on the bracket");
        (h.H(mid) > target ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double radius_exact(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v, double r)
{
    return radius_exact(h_coefficients(frame, theta, v), r);
}

DensityTaylor density_taylor(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v)
{
    frame.check_direction(v);
    const Eigen::VectorXd Dv = frame.D() * v;
    const Eigen::VectorXd proj = Dv - Dv.dot(frame.normal()) * frame.normal();
    const double s = std::sin(theta), co = std::cos(theta);
    return {2.0 * co * frame.beta(v), 2.0 * (s * frame.alpha() + co * co * proj.squaredNorm())};
}

double a_lower_bound(const QuadricFrame& frame, int theta_nodes)
{
    if (theta_nodes < 2) throw std::invalid_argument("a_lower_bound: need at least 2 angles");
    double omega = std::numeric_limits<double>::infinity();
    for (const auto& [v, w] : v_nodes(frame, AreaOptions{})) {
        for (int i = 0; i < theta_nodes; ++i) {
            const double th = -M_PI / 2 + M_PI * i / theta_nodes;
            omega = std::min(omega, h_coefficients(frame, th, v).A);
        }
    }
    return omega;
}

double area_direct(const QuadricFrame& frame, double r, const AreaOptions& opts)
{
    if (!(r > 0.0)) throw std::invalid_argument("area_direct: r must be positive");
    if (r >= frame.critical_distance()) throw std::domain_error("area_direct: r exceeds the distance to the critical set");
    const int n = frame.n();
    const double c = frame.c();
    const auto nodes = v_nodes(frame, opts);
    std::vector<double> partial(nodes.size(), 0.0);
    parallel_for(nodes.size(), opts.jobs, [&](std::size_t k) {
        const Eigen::VectorXd& v = nodes[k].first;
        auto theta_integrand = [&](double th) {
            const HCoefficients h = h_coefficients(frame, th, v);
            const double top = radius_exact(h, r);
            const double co = std::cos(th), s = std::sin(th);
            const double jac = std::pow(co, n - 2) * (1.0 + s * s) / c;
            auto rho_integrand = [&](double rho) {
                const Eigen::VectorXd y = frame.x() + polar_point(frame, rho, th, v);
                return std::pow(rho, n) * 2.0 * (frame.D() * y).norm();
            };
            return jac * boost::math::quadrature::gauss<double, 30>::integrate(rho_integrand, 0.0, top);
        };
        partial[k] = nodes[k].second * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                           theta_integrand, -M_PI / 2, M_PI / 2, 15, opts.tolerance);
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double area_direct_1d(double d, double x, double r)
{
    if (d == 0.0 || x == 0.0) throw std::invalid_argument("area_direct_1d: need d != 0 and x != 0");
    if (!(r > 0.0) || r >= std::abs(x)) throw std::domain_error("area_direct_1d: r must lie in (0, |x|)");
    const double c = 2.0 * std::abs(d * x);
    const double nrm = d * x > 0 ? 1.0 : -1.0;
    auto G = [&](double w) {
        const double lin = c * nrm * w + d * w * w;
        return w * w * w * w + lin * lin;
    };
    const double target = r * r * r * r;
    auto edge = [&](double sgn) {
        double lo = 0.0, hi = r;
        while (G(sgn * hi) <= target) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (G(sgn * mid) > target ? hi : lo) = mid;
        }
        return sgn * 0.5 * (lo + hi);
    };
    const double a = edge(-1.0), b = edge(1.0);
    auto integrand = [&](double w) { return 2.0 * std::abs(d * (x + w)); };
    return boost::math::quadrature::gauss<double, 30>::integrate(integrand, a, b);
}

double line_graph_area(double slope, double r)
{
    if (slope == 0.0) throw std::invalid_argument("line_graph_area: slope must be nonzero");
    if (!(r > 0.0)) throw std::invalid_argument("line_graph_area: r must be positive");
    // |w|^4 + a^2 w^2 <= r^4, with the stable form of the positive root in w^2
    const double a2 = slope * slope;
    const double w2 = 2.0 * r * r * r * r / (a2 + std::sqrt(a2 * a2 + 4.0 * r * r * r * r));
    return 2.0 * std::abs(slope) * std::sqrt(w2);
}

double closed_form_kernel_integral(int k, double alpha)
{
    if (k < 0) throw std::invalid_argument("closed_form_kernel_integral: k must be >= 0");
    if (!(alpha > (k + 1) / 2.0)) throw std::invalid_argument("closed_form_kernel_integral: requires alpha > (k+1)/2");
    if (k % 2 == 1) return 0.0;
    const double h = (k + 1) / 2.0;
    return std::exp(std::lgamma(h) + std::lgamma(alpha - h) - std::lgamma(alpha));
}

double kernel_constant(int n)
{
    if (n < 1) throw std::invalid_argument("kernel_constant: n must be >= 1");
    return std::sqrt(M_PI) * std::tgamma((n + 1) / 4.0) / ((n + 3) / 4.0 * std::tgamma((n + 3) / 4.0));
}

double area_constant(int n)
{
    if (n < 1) throw std::invalid_argument("area_constant: n must be >= 1");
    if (n == 1) return 2.0;
    return std::sqrt(M_PI) * std::tgamma((n - 1) / 4.0) * sphere_area(n - 2) / ((n + 1) * std::tgamma((n + 1) / 4.0));
}

namespace {

double bracket_at(const Eigen::MatrixXd& D, const Eigen::VectorXd& nrm)
{
    const int n = static_cast<int>(D.rows());
    const Eigen::MatrixXd D2 = D * D;
    const double a = nrm.dot(D * nrm);
    const double trace_part = D2.trace() - 2.0 * nrm.dot(D2 * nrm) + a * a;
    const double t = D.trace() - a;
    return trace_part / (4.0 * (n - 1)) - 0.25 - t * t / (8.0 * (n - 1));
}

} // namespace

ExpansionConstants expansion_constants(const QuadricFrame& frame)
{
    const int n = frame.n();
    ExpansionConstants out;
    out.c_n = area_constant(n);
    out.bracket = bracket_at(frame.D(), frame.normal());
    out.e = kernel_constant(n) * sphere_area(n - 2) / (frame.c() * frame.c()) * out.bracket;
    return out;
}

double uniformity_residual(const Eigen::MatrixXd& D, const Eigen::VectorXd& p)
{
    const int n = static_cast<int>(p.size());
    if (n < 2) throw std::invalid_argument("uniformity_residual: n must be >= 2");
    if (D.rows() != n || D.cols() != n) throw std::invalid_argument("uniformity_residual: D must be n x n");
    const Eigen::VectorXd Dp = D * p;
    if (Dp.norm() <= 1e-14 * std::max(1.0, D.norm() * p.norm())) throw std::invalid_argument("uniformity_residual: p lies in Ker D");
    return bracket_at(D, Dp.normalized());
}

ExpansionFit fit_expansion(const std::vector<std::pair<double, double>>& areas, int n, const std::vector<double>& weights)
{
    const std::size_t m = areas.size();
    if (m < 5) throw std::invalid_argument("fit_expansion: need at least 5 radii");
    if (!weights.empty() && weights.size() != m) throw std::invalid_argument("fit_expansion: weights size mismatch");
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (const auto& [r, a] : areas) {
        if (!(r > 0.0)) throw std::invalid_argument("fit_expansion: radii must be positive");
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    if (rmax < 4.0 * rmin) throw std::invalid_argument("fit_expansion: radii must span at least 2 octaves");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(m), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        const auto [r, a] = areas[i];
        // default weight: inverse square of the O(r^3) truncation error of the ratio
        const double w = weights.empty() ? std::pow(r, -3) : std::sqrt(weights[i]);
        const auto row = static_cast<Eigen::Index>(i);
        X(row, 0) = w;
        X(row, 1) = w * r;
        X(row, 2) = w * r * r;
        y[row] = w * a / std::pow(r, n + 1);
    }
    const Eigen::MatrixXd XtX = X.transpose() * X;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (sv[2] <= 1e-12 * sv[0]) throw std::invalid_argument("fit_expansion: ill-conditioned design");
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd res = y - X * beta;
    ExpansionFit out;
    out.c_hat = beta[0];
    out.zeta_hat = beta[1];
    out.e_hat = beta[2];
    out.residual_rms = std::sqrt(res.squaredNorm() / static_cast<double>(m));
    const double dof = static_cast<double>(m) - 3.0;
    if (dof > 0) {
        const Eigen::MatrixXd cov = res.squaredNorm() / dof * XtX.inverse();
        out.c_se = std::sqrt(cov(0, 0));
        out.zeta_se = std::sqrt(cov(1, 1));
        out.e_se = std::sqrt(cov(2, 2));
    }
    return out;
}

std::vector<std::vector<double>> richardson_table(const std::vector<double>& values)
{
    if (values.empty()) throw std::invalid_argument("richardson_table: no values");
    std::vector<std::vector<double>> table{values};
    for (std::size_t m = 1; m < values.size(); ++m) {
        const auto& prev = table.back();
        const double f = std::ldexp(1.0, static_cast<int>(m));
        std::vector<double> row;
        for (std::size_t k = 0; k + 1 < prev.size(); ++k) row.push_back((f * prev[k + 1] - prev[k]) / (f - 1.0));
        table.push_back(std::move(row));
    }
    return table;
}

} // namespace pgmt
