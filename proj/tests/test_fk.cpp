#include "doctest.h"
#include "pgmt/measures.hpp"

#include <Eigen/Dense>

#include <random>

using namespace pgmt;

namespace {

ParticleMeasure random_atoms(std::mt19937_64& rng, int n, int count, double spread)
{
    std::uniform_real_distribution<double> u(-spread, spread), w(0.1, 1.0);
    std::vector<double> coords, weights;
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < n; ++j) coords.push_back(u(rng));
        coords.push_back(u(rng) * spread);
        weights.push_back(w(rng));
    }
    return ParticleMeasure(n, coords, weights);
}

// Vertex enumeration for max c.f subject to f_i - f_j <= d_ij, 0 <= f_i <= cap_i.
double brute_force_lp(const std::vector<Point>& g, const std::vector<double>& c, const Ball& K)
{
    const int m = static_cast<int>(g.size());
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
            a[i] = 1;
            a[j] = -1;
            rows.push_back(a);
            rhs.push_back(distance(g[i], g[j], K.metric));
        }
        Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
        a[i] = 1;
        rows.push_back(a);
        rhs.push_back(boundary_distance(g[i], K.center, K.radius, K.metric));
        rows.push_back(-a);
        rhs.push_back(0.0);
    }
    const int R = static_cast<int>(rows.size());
    double best = -1e300;
    std::vector<int> pick(m);
    std::function<void(int, int)> rec = [&](int depth, int start) {
        if (depth == m) {
            Eigen::MatrixXd A(m, m);
            Eigen::VectorXd b(m);
            for (int q = 0; q < m; ++q) {
                A.row(q) = rows[pick[q]].transpose();
                b[q] = rhs[pick[q]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() < m) return;
            const Eigen::VectorXd f = lu.solve(b);
            for (int q = 0; q < R; ++q) {
                if (rows[q].dot(f) > rhs[q] + 1e-9) return;
            }
            double v = 0;
            for (int i = 0; i < m; ++i) v += c[i] * f[i];
            best = std::max(best, v);
            return;
        }
        for (int q = start; q < R; ++q) {
            pick[depth] = q;
            rec(depth + 1, q + 1);
        }
    };
    rec(0, 0);
    return best;
}

} // namespace

TEST_CASE("F_K is a pseudometric on random clouds")
{
    std::mt19937_64 rng(21);
    const Ball K{Point::origin(2), 1.0, Metric::Koranyi};
    for (int trial = 0; trial < 5; ++trial) {
        const ParticleMeasure a = random_atoms(rng, 2, 40, 0.8);
        const ParticleMeasure b = random_atoms(rng, 2, 40, 0.8);
        const ParticleMeasure c = random_atoms(rng, 2, 40, 0.8);
        FkOptions opts;
        opts.k_neighbors = 200;
        for (const auto* mu : {&a, &b, &c}) {
            for (std::size_t i = 0; i < mu->size(); ++i) opts.extra_grid.push_back(mu->point(i));
        }
        CHECK(fk_distance(a, a, K, opts) == 0.0);
        const double ab = fk_distance(a, b, K, opts);
        const double ba = fk_distance(b, a, K, opts);
        const double bc = fk_distance(b, c, K, opts);
        const double ac = fk_distance(a, c, K, opts);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
        CHECK(ac <= ab + bc + 1e-10);
    }
}

TEST_CASE("F_K matches vertex enumeration on small instances")
{
    std::mt19937_64 rng(22);
    for (Metric metric : {Metric::Koranyi, Metric::BoxInf}) {
        for (int trial = 0; trial < 6; ++trial) {
            const Ball K{Point({0.1, -0.2}, 0.05), 1.0, metric};
            const ParticleMeasure phi = random_atoms(rng, 2, 2, 0.5);
            const ParticleMeasure psi = random_atoms(rng, 2, 2, 0.5);
            const FkResult res = fk_solve(phi, psi, K, {});
            REQUIRE(res.grid.size() == 4);
            std::vector<double> c(4, 0.0);
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t q = 0; q < 2; ++q) {
                    if (distance(res.grid[i], phi.point(q), metric) == 0.0) c[i] += phi.weights[q];
                    if (distance(res.grid[i], psi.point(q), metric) == 0.0) c[i] -= psi.weights[q];
                }
            }
            std::vector<double> neg(c);
            for (double& v : neg) v = -v;
            const double oracle = std::max({0.0, brute_force_lp(res.grid, c, K), brute_force_lp(res.grid, neg, K)});
            CHECK(res.value == doctest::Approx(oracle).epsilon(1e-9));
            // the returned test function is feasible and attains the value
            double attained = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                CHECK(res.f[i] >= -1e-12);
                CHECK(res.f[i] <= boundary_distance(res.grid[i], K.center, K.radius, metric) + 1e-12);
                attained += res.sign * c[i] * res.f[i];
            }
            CHECK(attained == doctest::Approx(res.value).epsilon(1e-9));
        }
    }
}

TEST_CASE("F_K of two Dirac masses")
{
    // f = dist(., K^c) capped: for a single atom of mass w at p the value is w * dist(p, K^c).
    const Ball K{Point::origin(1), 1.0, Metric::BoxInf};
    const ParticleMeasure a(1, {0.25, 0.0}, {2.0});
    const ParticleMeasure zero(1, {5.0, 0.0}, {1.0});
    CHECK(fk_distance(a, zero, K) == doctest::Approx(2.0 * 0.75).epsilon(1e-12));
}

TEST_CASE("F_K scales under dilation")
{
    std::mt19937_64 rng(23);
    const ParticleMeasure phi = random_atoms(rng, 2, 60, 1.0);
    const ParticleMeasure psi = random_atoms(rng, 2, 60, 1.0);
    const Point x({0.1, 0.2}, -0.1);
    const double r = 0.7;
    const Ball K{x, r, Metric::Koranyi};
    const Ball unit{Point::origin(2), 1.0, Metric::Koranyi};
    // pushforward by T = dilate(. - x, 1/r) with the mass kept: F_{x,r}(phi, psi) = r F_{0,1}(T phi, T psi)
    const double h = 0.0;
    const double lhs = fk_distance(phi, psi, K);
    const double rhs = r * fk_distance(blowup(phi, x, r, h), blowup(psi, x, r, h), unit);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-3));
}

TEST_CASE("flat_lattice reproduces the flat ball mass")
{
    const VerticalHyperplane V({0.0, 1.0}, 0.0);
    const Ball K{Point::origin(2), 1.0, Metric::Koranyi};
    const ParticleMeasure lat = flat_lattice(V, K, 4000);
    CHECK(lat.total_mass() == doctest::Approx(1.0).epsilon(2e-2));
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(std::abs(lat.atom(i)[1]) < 1e-15);
}

TEST_CASE("flat_distance separates flat and non-flat data")
{
    SUBCASE("a flat plane through x is near zero")
    {
        const MeasureModel m = flat_plane_model(VerticalHyperplane({0.0, 1.0}, 0.0));
        const ParticleMeasure lat = flat_lattice(VerticalHyperplane({0.0, 1.0}, 0.0), Ball{Point::origin(2), 1.0}, 400);
        FlatDistanceOptions opts;
        opts.flat_points = 400;
        const FlatDistanceResult res = flat_distance(lat, Point::origin(2), 1.0, 3, opts);
        CHECK(res.value < 1e-9);
        CHECK(std::abs(res.plane.normal[1]) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(res.lambda == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("the KP cone is bounded away from flat")
    {
        const MeasureModel kp = kp_cone_model(4);
        SampleOptions so;
        so.proposal = Proposal::Window;
        so.scale = 1.0;
        const ParticleMeasure mu = sample(kp, 4000, 31, so);
        FlatDistanceOptions opts;
        opts.flat_points = 300;
        opts.max_data_points = 400;
        opts.coarse_normals = 16;
        opts.refine_steps = 3;
        opts.lambda_iterations = 16;
        const FlatDistanceResult res = flat_distance(mu, Point::origin(4), 1.0, 5, opts);
        CHECK(res.value > 1e-3);
    }
}
