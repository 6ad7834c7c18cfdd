#include "doctest.h"
#include "pgmt/core.hpp"

#include <random>

using namespace pgmt;

namespace {

Point random_point(std::mt19937_64& rng, int n, double scale = 2.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> h(n);
    for (double& v : h) v = u(rng);
    return Point(h, u(rng) * scale);
}

} // namespace

TEST_CASE("dilate matches the definition")
{
    const Point x({1.0, 0.0}, 3.0);
    const Point y = dilate(x, 2.0);
    CHECK(y.h[0] == 2.0);
    CHECK(y.h[1] == 0.0);
    CHECK(y.t == 12.0);
    const Point z = dilate(x, 1.0);
    CHECK(z.h == x.h);
    CHECK(z.t == x.t);
    CHECK_THROWS_AS(dilate(x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(dilate(x, -1.0), std::invalid_argument);
}

TEST_CASE("dilations compose")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lam(0.1, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Point x = random_point(rng, 3);
        const double a = lam(rng), b = lam(rng);
        const Point p = dilate(dilate(x, a), b);
        const Point q = dilate(x, a * b);
        for (int j = 0; j < 3; ++j) CHECK(p.h[j] == doctest::Approx(q.h[j]).epsilon(1e-14));
        CHECK(p.t == doctest::Approx(q.t).epsilon(1e-14));
    }
}

TEST_CASE("distance examples in P^1")
{
    CHECK(distance(Point({1.0}, 0.0), Point({0.0}, 0.0), Metric::Koranyi) == 1.0);
    CHECK(distance(Point({0.0}, 1.0), Point({0.0}, 0.0), Metric::Koranyi) == 1.0);
    CHECK(distance(Point({0.0}, 4.0), Point({0.0}, 0.0), Metric::BoxInf) == 2.0);
    CHECK_THROWS_AS(distance(Point({0.0}, 0.0), Point({0.0, 1.0}, 0.0), Metric::Koranyi), std::invalid_argument);
}

TEST_CASE("box and Koranyi are equivalent with constant 2^{1/4}")
{
    std::mt19937_64 rng(12);
    const double c = std::pow(2.0, 0.25);
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + i % 4;
        const Point x = random_point(rng, n), y = random_point(rng, n);
        const double b = distance(x, y, Metric::BoxInf);
        const double k = distance(x, y, Metric::Koranyi);
        CHECK(b <= k * (1 + 1e-15));
        CHECK(k <= c * b * (1 + 1e-15));
    }
}

TEST_CASE("metric properties on random triples")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> lam(0.05, 20.0);
    for (Metric m : {Metric::Koranyi, Metric::BoxInf}) {
        for (int i = 0; i < 1000; ++i) {
            const int n = 1 + i % 3;
            const Point x = random_point(rng, n), y = random_point(rng, n), z = random_point(rng, n);
            const double l = lam(rng);
            const double d = distance(x, y, m);
            CHECK(distance(dilate(x, l), dilate(y, l), m) == doctest::Approx(l * d).epsilon(1e-12));
            CHECK(distance(add(z, x), add(z, y), m) == doctest::Approx(d).epsilon(1e-12));
            CHECK(distance(y, x, m) == d);
            CHECK(distance(x, x, m) == 0.0);
            CHECK(distance(x, z, m) <= distance(x, y, m) + distance(y, z, m) + 1e-12);
        }
    }
}

TEST_CASE("plane_distance closed form against brute force")
{
    SUBCASE("trivial cases")
    {
        const VerticalHyperplane V({1.0, 0.0, 0.0}, 0.0);
        CHECK(plane_distance(Point({0.0, 5.0, -1.0}, 7.0), V, Metric::Koranyi) == 0.0);
        CHECK(plane_distance(Point({2.0, 0.0, 0.0}, -3.0), V, Metric::Koranyi) == 2.0);
    }
    SUBCASE("brute force over plane samples")
    {
        std::mt19937_64 rng(14);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (Metric m : {Metric::Koranyi, Metric::BoxInf}) {
            for (int trial = 0; trial < 4; ++trial) {
                std::vector<double> nrm = {u(rng), u(rng)};
                const double len = std::sqrt(norm2(nrm));
                for (double& v : nrm) v /= len;
                const VerticalHyperplane V(nrm, 0.3);
                const Point x({0.3 * nrm[0] + (0.6 + 0.2 * trial) * nrm[0] + 0.4 * nrm[1],
                               0.3 * nrm[1] + (0.6 + 0.2 * trial) * nrm[1] - 0.4 * nrm[0]},
                              1.5);
                const auto tang = orthonormal_complement(nrm);
                const double proj = dot(nrm, x.h) - V.offset;
                double best = 1e300;
                const int g = 316;
                for (int i = 0; i < g; ++i) {
                    for (int j = 0; j < g; ++j) {
                        const double y = -0.5 + (i + 0.5) / g;
                        const double dt = -0.25 + 0.5 * (j + 0.5) / g;
                        const Point q({x.h[0] - proj * nrm[0] + y * tang[0][0], x.h[1] - proj * nrm[1] + y * tang[0][1]},
                                      x.t + dt);
                        best = std::min(best, distance(x, q, m));
                    }
                }
                const double closed = plane_distance(x, V, m);
                CHECK(best >= closed - 1e-12);
                CHECK(best - closed <= 1e-3);
            }
        }
    }
}

TEST_CASE("stratification of homogeneous subgroups")
{
    const HomSubgroup vertical_line(1, {}, true);
    CHECK(stratification(vertical_line) == std::pair<int, int>{0, 1});
    CHECK(vertical_line.homogeneous_dimension() == 2);

    const HomSubgroup hyper(3, {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}, true);
    CHECK(stratification(hyper) == std::pair<int, int>{2, 1});
    CHECK(hyper.homogeneous_dimension() == 4);

    const HomSubgroup horizontal(2, {{1.0, 0.0}, {0.0, 1.0}}, false);
    CHECK(stratification(horizontal) == std::pair<int, int>{2, 0});
    CHECK(horizontal.homogeneous_dimension() == 2);

    CHECK_THROWS_AS(HomSubgroup(2, {{1.0, 1.0}}, false), std::invalid_argument);
}

TEST_CASE("boundary_distance against sphere sampling")
{
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    const Point x({0.2, -0.1}, 0.3);
    const double r = 1.3;
    for (int trial = 0; trial < 10; ++trial) {
        const Point g({x.h[0] + u(rng), x.h[1] + u(rng)}, x.t + u(rng));
        for (Metric m : {Metric::Koranyi, Metric::BoxInf}) {
            double best = 1e300;
            // Points at distance r from x: scan directions and radii parameters.
            for (int i = 0; i < 400; ++i) {
                const double phi = 2 * M_PI * i / 400;
                for (int j = 0; j <= 400; ++j) {
                    const double s = -1.0 + 2.0 * j / 400;
                    Point z;
                    if (m == Metric::Koranyi) {
                        const double rho = r * std::pow(1.0 - s * s, 0.25);
                        z = Point({x.h[0] + rho * std::cos(phi), x.h[1] + rho * std::sin(phi)}, x.t + s * r * r);
                    } else {
                        // faces of the box: lateral |h| = r or caps |t| = r^2
                        const double rho = r * (j % 2 == 0 ? 1.0 : std::abs(s));
                        const double tt = j % 2 == 0 ? s * r * r : (s < 0 ? -r * r : r * r);
                        z = Point({x.h[0] + rho * std::cos(phi), x.h[1] + rho * std::sin(phi)}, x.t + tt);
                    }
                    best = std::min(best, distance(g, z, m));
                }
            }
            const double bd = boundary_distance(g, x, r, m);
            CHECK(bd <= best + 1e-12);
            CHECK(best - bd <= 2e-2);
            CHECK(bd >= r - distance(g, x, m) - 1e-12);
        }
    }
}

TEST_CASE("sphere areas")
{
    CHECK(sphere_area(0) == doctest::Approx(2.0));
    CHECK(sphere_area(1) == doctest::Approx(2 * M_PI));
    CHECK(sphere_area(2) == doctest::Approx(4 * M_PI));
}
