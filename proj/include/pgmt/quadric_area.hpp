#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace pgmt {

// Local frame of the graph t = <y, D y> at the horizontal point x.
class QuadricFrame {
public:
    QuadricFrame(Eigen::MatrixXd D, Eigen::VectorXd x);

    int n() const { return static_cast<int>(x_.size()); }
    const Eigen::MatrixXd& D() const { return D_; }
    const Eigen::VectorXd& x() const { return x_; }
    // horizontal normal Dx / |Dx|
    const Eigen::VectorXd& normal() const { return normal_; }
    // c = 2 |Dx|
    double c() const { return c_; }
    // <n, D n>
    double alpha() const { return alpha_; }
    double beta(const Eigen::VectorXd& v) const { return v.dot(D_ * normal_); }
    double gamma(const Eigen::VectorXd& v) const { return v.dot(D_ * v); }

    // Orthonormal basis of the complement of the normal (columns).
    const Eigen::MatrixXd& tangent_basis() const { return tangent_; }
    // Distance from x to the critical set Ker D.
    double critical_distance() const { return critical_distance_; }

    // Throws std::invalid_argument unless |v| = 1 and v is orthogonal to the normal.
    void check_direction(const Eigen::VectorXd& v) const;

private:
    Eigen::MatrixXd D_;
    Eigen::VectorXd x_;
    Eigen::VectorXd normal_;
    Eigen::MatrixXd tangent_;
    double c_ = 0.0;
    double alpha_ = 0.0;
    double critical_distance_ = 0.0;
};

// G(w) = |w|^4 + (c <n, w> + <w, D w>)^2; its sublevel set {G <= r^4} is the horizontal
// projection of the ball B((x, f(x)), r) on the graph, translated by -x.
double G_function(const QuadricFrame& frame, const Eigen::VectorXd& w);

// P(rho, theta, v) = sin(theta) rho^2 / c * n + cos(theta) rho v
Eigen::VectorXd polar_point(const QuadricFrame& frame, double rho, double theta, const Eigen::VectorXd& v);

struct HCoefficients {
    double A = 0.0, Bbar = 0.0, Cbar = 0.0, Dbar = 0.0, Ebar = 0.0;
    double c = 1.0;

    // H(rho) = A rho^4 + Bbar rho^5 / c + Cbar rho^6 / c^2 + Dbar rho^7 / c^3 + Ebar rho^8 / c^4
    double H(double rho) const;
    // dH/drho divided by rho^3
    double reduced_derivative(double rho) const;
};

HCoefficients h_coefficients(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v);

// Third-order series P_{theta,v}(r) for the root of H(rho) = r^4.
double radius_solution(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v, double r);

// Smallest positive root of H(rho) = r^4 by bracketed bisection to machine precision.
// Throws std::domain_error if H is not monotone on the bracket.
double radius_exact(const HCoefficients& h, double r);
double radius_exact(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v, double r);

// Taylor coefficients of rho -> 2 |D (x + P(rho, theta, v))| = c + Acal rho + (Bcal_bar / c) rho^2 + O(rho^3).
struct DensityTaylor {
    double Acal = 0.0;
    double Bcal_bar = 0.0;
};
DensityTaylor density_taylor(const QuadricFrame& frame, double theta, const Eigen::VectorXd& v);

// min of A over a (theta, v) grid: theta_nodes angles times the v-nodes used by area_direct.
double a_lower_bound(const QuadricFrame& frame, int theta_nodes = 512);

struct AreaOptions {
    // v-integration: two-point sum for n = 2, uniform angles for n = 3, Monte Carlo for n >= 4
    int v_nodes = 64;
    int mc_samples = 4096;
    std::uint64_t seed = 1;
    double tolerance = 1e-12;
    int jobs = 1;
};

// sigma_{gr f}(B((x, f(x)), r)) by quadrature of Xi over {H <= r^4}.
double area_direct(const QuadricFrame& frame, double r, const AreaOptions& opts = {});

// Same area for n = 1, f(y) = d y^2, by 1-D quadrature over {G <= r^4}.
double area_direct_1d(double d, double x, double r);

// Exact area of B((x, a x), r) on the line graph t = a y in P^1.
double line_graph_area(double slope, double r);

// int_R x^k / (1 + x^2)^alpha dx
double closed_form_kernel_integral(int k, double alpha);

// C_n = sqrt(pi) Gamma((n+1)/4) / ((n+3)/4 Gamma((n+3)/4))
double kernel_constant(int n);

// c_n = sqrt(pi) Gamma((n-1)/4) area(S^{n-2}) / ((n+1) Gamma((n+1)/4)); n = 1 gives 2.
double area_constant(int n);

struct ExpansionConstants {
    double c_n = 0.0;
    double e = 0.0;
    double bracket = 0.0; // c^2 e / (C_n area(S^{n-2}))
};

ExpansionConstants expansion_constants(const QuadricFrame& frame);

// Same bracket evaluated at n = D p / |D p|.
double uniformity_residual(const Eigen::MatrixXd& D, const Eigen::VectorXd& p);

struct ExpansionFit {
    double c_hat = 0.0, zeta_hat = 0.0, e_hat = 0.0;
    double c_se = 0.0, zeta_se = 0.0, e_se = 0.0;
    double residual_rms = 0.0;
};

// Weighted least squares of area / r^{n+1} against {1, r, r^2}. Weights default to r^{-6},
// the inverse square of the truncation error left by the three-term expansion.
ExpansionFit fit_expansion(const std::vector<std::pair<double, double>>& areas, int n,
                           const std::vector<double>& weights = {});

// Richardson table for values a(r_k) with r_{k+1} = r_k / 2 assuming an error series in r, r^2, r^3, ...
// Row m holds the extrapolants after eliminating m powers.
std::vector<std::vector<double>> richardson_table(const std::vector<double>& values);

} // namespace pgmt
