#pragma once

#include "pgmt/measures.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pgmt {

// ---------------------------------------------------------------------------
// beta numbers
// ---------------------------------------------------------------------------

struct BetaOptions {
    // Fibonacci-type normal grid of size 2^n * grid_factor, then local refinement.
    int grid_factor = 64;
    int refine_steps = 20;
    // Plane points sampled in V cap B for the bilateral term.
    int plane_samples = 1000;
    // Number of best beta normals re-evaluated for bbeta.
    int bbeta_candidates = 2;
    std::uint64_t seed = 1;
};

struct BetaPair {
    double beta = 0.0;
    double bbeta = 0.0;
    VerticalHyperplane best_plane{{1.0}, 0.0};
    std::size_t atoms_in_ball = 0;
};

// Support atoms are the atoms with positive weight. Distances use the Koranyi metric.
BetaPair beta_numbers(const ParticleMeasure& mu, const Point& center, double r, const BetaOptions& opts = {});

// ---------------------------------------------------------------------------
// Parabolic dyadic cubes
// ---------------------------------------------------------------------------

struct DyadicOptions {
    int j0 = 0;
    // Cubes with mass below prune_fraction * (generation median) are flagged and skipped in statistics.
    double prune_fraction = 1.0 / 16.0;
    // If core > 0, only atoms whose generation-j0 box index lies in [-core, core) in every
    // coordinate are decomposed. The full cloud is still used for beta numbers.
    int core = 0;
    // beta numbers of Q are taken on B(z_Q, ball_factor * l(Q))
    double ball_factor = 3.0;
    bool compute_beta = true;
    BetaOptions beta;
    int jobs = 1;
};

struct Cube {
    int generation = 0;
    std::vector<std::int64_t> index;
    // side length l(Q) = 2^{-j}
    double side = 1.0;
    std::vector<std::size_t> atoms;
    double mass = 0.0;
    Point center;
    int parent = -1;
    std::vector<int> children;
    bool pruned = false;
    std::optional<double> beta;
    std::optional<double> bbeta;
    double diameter = 0.0;
    // distance from the centre to the nearest support atom outside the cube
    double inner_radius = 0.0;
};

struct GenerationStats {
    int generation = 0;
    std::size_t cubes = 0;
    std::size_t retained = 0;
    double median_mass_ratio = 0.0; // mu(Q) / 2^{-j(n+1)}
    double min_mass_ratio = 0.0;
    double max_mass_ratio = 0.0;
    double min_diam_ratio = 0.0; // diam(Q) / 2^{-j}
    double max_diam_ratio = 0.0;
    double min_inner_ratio = 0.0; // dist(z_Q, supp \ Q) / 2^{-j}
};

struct CubeTree {
    int n = 0;
    int j0 = 0;
    int depth = 0;
    std::vector<Cube> cubes;
    std::vector<int> roots;
    std::vector<GenerationStats> stats;
    std::size_t decomposed_atoms = 0;

    std::vector<int> generation(int j) const;
};

CubeTree dyadic_decompose(const ParticleMeasure& mu, int depth, const DyadicOptions& opts = {});

// One JSON object per cube: generation, index, center, mass, side, beta, bbeta, pruned.
std::string to_json_lines(const CubeTree& tree);

struct BwglResult {
    double value = 0.0;
    int worst_root = -1;
    // bad mass / root mass, per generation, for the worst root
    std::vector<double> profile;
};

// max over roots R of sum_{Q in R, bbeta(Q) > eta} mu(Q) / mu(R), retained cubes only.
BwglResult carleson_bwgl(const CubeTree& tree, double eta);

// ---------------------------------------------------------------------------
// WCD probe, R_{r,s}, square function
// ---------------------------------------------------------------------------

struct WcdOptions {
    int samples = 64;
    std::uint64_t seed = 7;
};

struct WcdResult {
    bool pass = false;
    double theta = 0.0;           // fitted density normalisation
    double worst_deviation = 0.0; // max |sigma(B(y,t)) - t^{n+1}| / r^{n+1}
    Point worst_center;
    double worst_radius = 0.0;
};

WcdResult wcd_probe(const ParticleMeasure& mu, const Point& x, double r, double eps, const WcdOptions& opts = {});

struct ROperatorResult {
    std::vector<double> value;
    std::vector<double> std_error;
};

// sum over atoms y with r < ||z - y|| <= s of w |z_H - y_H|^2 (z_H - y_H) / ||z - y||^{n+4}.
ROperatorResult r_operator(const ParticleMeasure& mu, const Point& z, double r, double s);

// sup over support atoms x in B(z, r) of |<(x_H - z_H) / r, R_{r,s} mu(z)>|.
double touching_point_sup(const ParticleMeasure& mu, const Point& z, double r, double s);

struct SquareFunctionOptions {
    int nodes_per_decade = 32;
    // Lower cutoff: radius of the ball at x holding this many support atoms (ignored if r_min > 0).
    int resolution_atoms = 64;
    double r_min = 0.0;
};

struct SquareFunctionResult {
    double value = 0.0;
    // same sum with |difference| replaced by 3 standard errors
    double noise_floor = 0.0;
    double r_min = 0.0;
    std::vector<double> radii;
    std::vector<double> differences;
};

// int_{r_min}^{R} |mu(B(x,r))/r^{n+1} - mu(B(x,2r))/(2r)^{n+1}|^q dr/r, nodes log-spaced downward from R.
SquareFunctionResult density_square_function(const ParticleMeasure& mu, const Point& x, double R, double q,
                                             const SquareFunctionOptions& opts = {});

} // namespace pgmt
