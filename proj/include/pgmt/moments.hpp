#pragma once

#include "pgmt/measures.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace pgmt {

// V(u, z) = (||z||^4 + ||u||^4 - ||z - u||^4) / 2 split as 2V = L + Q + T.
struct PolarizationParts {
    double V = 0.0;
    double L = 0.0;
    double Q = 0.0;
    double T = 0.0;
};

PolarizationParts polarization(const Point& u, const Point& z);
PolarizationParts polarization_raw(const double* u, const double* z, int n);

// C(h) = Gamma(h/4 + 1).
double moment_constant(double h);

// The homogeneous dimension used by default is mu.h_dim.
MassEstimate moment(const ParticleMeasure& mu, int k, double s, const Point& u, std::optional<double> h = {});

MassEstimate c_alpha(const ParticleMeasure& mu, const std::array<int, 3>& alpha, double s, const Point& u,
                     std::optional<double> h = {});

struct MomentCurves {
    double s = 0.0;
    Eigen::VectorXd b;
    Eigen::MatrixXd Q;
    double T = 0.0;
    Eigen::VectorXd b_se;
    Eigen::MatrixXd Q_se;
    double T_se = 0.0;
};

MomentCurves moment_curves(const ParticleMeasure& mu, double s, std::optional<double> h = {});

struct FlatnessEstimate {
    double value = 0.0;
    // Delta-method error of u^T M u at the minimising direction.
    double std_error = 0.0;
    Eigen::MatrixXd M;
    Eigen::VectorXd direction;
    std::int64_t n_samples = 0;
};

// inf over unit horizontal u of int |z_H|^4 <z_H, u>^2 exp(-||z||^4) dmu = lambda_min(M).
FlatnessEstimate flatness_functional(const ParticleMeasure& mu);

// c_(4,0,0),1 + c_(2,1,0),1 + c_(0,2,0),1 + c_(1,0,1),1 - ||u||^4, estimated with one combined integrand.
MassEstimate quartic_residual(const ParticleMeasure& mu, const Point& u, std::optional<double> h = {});

// |sum_{k=1}^{4q} b_{k,s}(u) - sum_{k=1}^{q} s^k ||u||^{4k} / k!| with the error of the signed difference.
MassEstimate expansion_residual(const ParticleMeasure& mu, const Point& u, double s, int q,
                                std::optional<double> h = {});

// Operator norm of Q(s) along a decreasing s grid.
std::vector<double> degeneracy_probe(const ParticleMeasure& mu, const std::vector<double>& s_grid,
                                     std::optional<double> h = {});

// int ||z - u||^p exp(-s ||z - u||^4) dmu(z) and its value (h/4) s^{-(h+p)/4} Gamma((h+p)/4) for uniform measures.
MassEstimate radial_gaussian_integral(const ParticleMeasure& mu, const Point& u, double s, double p);
double radial_gaussian_closed_form(double h, double s, double p);

struct MomentReport {
    double h = 0.0;
    std::vector<MomentCurves> curves;
    std::optional<FlatnessEstimate> flatness;
};

MomentReport moment_report(const ParticleMeasure& mu, const std::vector<double>& s_grid, bool with_flatness = true);
std::string to_json(const MomentReport& report);

} // namespace pgmt
