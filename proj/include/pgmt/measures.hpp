#pragma once

#include "pgmt/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pgmt {

// ---------------------------------------------------------------------------
// Analytic models
// ---------------------------------------------------------------------------

// Haar measure on a vertical hyperplane V_1 x R; in P^1 this is the vertical line {c*u} x R.
struct FlatPlane {
    VerticalHyperplane plane{{1.0}, 0.0};
};

// {base_H} x R carrying 1/2 times Lebesgue measure in t.
struct VerticalLine {
    Point base;
};

// Graph t = <y, D y> + <b, y> with surface measure |2 D y + b| dy.
struct QuadricGraph {
    Eigen::MatrixXd D;
    Eigen::VectorXd b;
};

// Vertically ruled quadric cone {<y, Q y> + <b, y> = 0} x R with H^{n-1} x dt.
// Sampling supports b = 0 and Q with exactly one eigenvalue of one sign.
struct ConeCylinder {
    Eigen::MatrixXd Q;
    Eigen::VectorXd b;
};

// {x1^2 + x2^2 + x3^2 = x4^2} x R^{n-4} x R.
struct KPConeProduct {
    int n = 4;
};

// Graph {(f(t), t)} in P^1 with the pushforward of Lebesgue measure in t.
struct HolderGraph {
    std::function<double(double)> f;
    double certified_constant = 0.0;
    std::string label;
};

using ModelShape = std::variant<FlatPlane, VerticalLine, QuadricGraph, ConeCylinder, KPConeProduct, HolderGraph>;

struct MeasureModel {
    ModelShape shape;
    double normalization = 1.0;

    int n() const;
    // Homogeneous dimension h used by the moments and densities.
    double homogeneous_dim() const;
    std::string kind() const;
};

MeasureModel flat_plane_model(const VerticalHyperplane& V);
MeasureModel vertical_line_model(const Point& base);
MeasureModel quadric_graph_model(const Eigen::MatrixXd& D, const Eigen::VectorXd& b);
MeasureModel cone_cylinder_model(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, double normalization = 1.0);
MeasureModel kp_cone_model(int n);
MeasureModel holder_graph_model(std::function<double(double)> f, double certified_constant, std::string label = {});

// lambda_n with lambda_n * (H^{n-1} on V_1 x dt) giving unit Koranyi balls unit mass.
double flat_normalization(int n);

// Normalization of the KP cone product: inverse Monte-Carlo unit-ball mass at the vertex,
// computed once per n and cached.
struct KPNormalization {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};
KPNormalization kp_normalization(int n);

// Closed-form ball mass when the model provides one; nullopt otherwise.
std::optional<double> model_ball_mass(const MeasureModel& model, const Point& x, double r, Metric m);

// ---------------------------------------------------------------------------
// Particle measures
// ---------------------------------------------------------------------------

enum class Proposal {
    Gaussian, // unbounded: Gaussian in parameter space with parabolic scale
    Window    // restriction of the measure to a parameter box, uniform proposal
};

struct SampleOptions {
    Proposal proposal = Proposal::Gaussian;
    // Horizontal parameter scale l; the time parameter uses l^2.
    double scale = 1.0;
    // Centre of the proposal in the model's parameter space (empty = origin).
    std::vector<double> center;
    // Antithetic pairs p, 2c - p; standard errors are then computed per pair.
    bool antithetic = false;
};

class ParticleMeasure {
public:
    ParticleMeasure() = default;
    ParticleMeasure(int n, std::vector<double> coords, std::vector<double> weights, int group = 1);

    int n = 0;
    // Row-major atoms: n horizontal coordinates then t.
    std::vector<double> coords;
    std::vector<double> weights;
    // Atoms come in consecutive groups of this size that form one independent draw.
    int group = 1;
    // Start offsets of independently drawn blocks (empty: one block).
    std::vector<std::size_t> strata;
    std::optional<double> total_mass_hint;
    std::uint64_t seed = 0;
    std::optional<MeasureModel> model;
    // Homogeneous dimension used by default in moments and densities.
    double h_dim = 0.0;

    std::size_t size() const { return weights.size(); }
    const double* atom(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(n + 1); }
    Point point(std::size_t i) const;
    double total_mass() const;
};

struct MassEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

// Sum of weight * g(atom) over the atoms, with the i.i.d. standard error over draws.
MassEstimate weighted_estimate(const ParticleMeasure& mu, const std::function<double(const double*)>& g);

// Vector-valued version: g writes dim values per atom; one estimate per component.
std::vector<MassEstimate> weighted_estimates(const ParticleMeasure& mu, int dim,
                                             const std::function<void(const double*, double*)>& g);

// Number of parameters of the model's sampling chart (sign choices excluded).
int parameter_dim(const MeasureModel& model);

// Chart parameters of a point of the support (used to centre proposals).
std::vector<double> chart_parameters(const MeasureModel& model, const Point& x);

ParticleMeasure sample(const MeasureModel& model, std::int64_t N, std::uint64_t seed,
                       const SampleOptions& opts = {});

// Multi-scale cloud around a support point z: a window sample restricted to B(z, r_min) plus one
// window sample per dyadic shell up to r_max, each restricted to its shell and kept as its own
// stratum. Atoms outside their shell keep weight 0 so the per-stratum draw count is unchanged.
ParticleMeasure sample_shells(const MeasureModel& model, const Point& z, double r_min, double r_max,
                              std::int64_t per_shell, std::uint64_t seed, Metric m = Metric::Koranyi);

MassEstimate ball_mass(const ParticleMeasure& mu, const Point& x, double r, Metric m);

// Atoms p -> dilate(p - x, 1/r), weights times r^{-h}.
ParticleMeasure blowup(const ParticleMeasure& mu, const Point& x, double r, double h);

std::vector<MassEstimate> density_curve(const ParticleMeasure& mu, const Point& x, const std::vector<double>& radii,
                                        double h, Metric m = Metric::Koranyi);

// Concatenation of two atom lists (same n); the inputs become independent strata.
ParticleMeasure merge(const ParticleMeasure& a, const ParticleMeasure& b);

// CSV point cloud: header "n,<int>", rows h1,...,hn,t,weight with 17 significant digits.
void write_csv(const ParticleMeasure& mu, std::ostream& out);
ParticleMeasure read_csv(std::istream& in);
void write_csv_file(const ParticleMeasure& mu, const std::string& path);
ParticleMeasure read_csv_file(const std::string& path);

// ---------------------------------------------------------------------------
// F_K and the flat distance
// ---------------------------------------------------------------------------

struct Ball {
    Point center;
    double radius = 1.0;
    Metric metric = Metric::Koranyi;
};

struct FkOptions {
    int k_neighbors = 16;
    // Extra grid locations (weight ignored) so several evaluations share one function class.
    std::vector<Point> extra_grid;
};

struct FkResult {
    double value = 0.0;
    // +1 if the maximiser favours phi, -1 otherwise.
    int sign = 1;
    std::vector<Point> grid;
    // Optimal test function on the grid for the winning sign.
    std::vector<double> f;
    std::size_t n_constraints = 0;
};

FkResult fk_solve(const ParticleMeasure& phi, const ParticleMeasure& psi, const Ball& K, const FkOptions& opts = {});
double fk_distance(const ParticleMeasure& phi, const ParticleMeasure& psi, const Ball& K, const FkOptions& opts = {});

// Lattice discretisation of the normalised flat measure on V restricted to B(x, r).
ParticleMeasure flat_lattice(const VerticalHyperplane& V, const Ball& K, int target_points);

struct FlatDistanceOptions {
    Metric metric = Metric::Koranyi;
    int flat_points = 400;
    // Data atoms in the ball beyond this count are merged onto a subset of centres.
    int max_data_points = 1200;
    int k_neighbors = 16;
    int coarse_normals = 24;
    int refine_steps = 8;
    int lambda_iterations = 24;
};

struct FlatDistanceResult {
    double value = 0.0;
    VerticalHyperplane plane{{1.0}, 0.0};
    double lambda = 1.0;
    int lp_solves = 0;
};

// inf over vertical hyperplanes V through x and lambda > 0 of F_{x,r}(phi, lambda flat(V)) / r^{h+1}.
FlatDistanceResult flat_distance(const ParticleMeasure& phi, const Point& x, double r, int h,
                                 const FlatDistanceOptions& opts = {});

} // namespace pgmt
