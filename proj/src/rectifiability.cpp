#include "pgmt/rectifiability.hpp"

#include "rectifiability_internal.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

namespace pgmt {

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base)
{
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

std::vector<std::vector<double>> build_normal_grid(int n, int count)
{
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    if (n == 1) {
        out.push_back({1.0});
        return out;
    }
    if (n == 2) {
        // u and -u give the same width, so half a circle suffices
        for (int i = 0; i < count; ++i) {
            const double th = M_PI * (i + 0.5) / count;
            out.push_back({std::cos(th), std::sin(th)});
        }
        return out;
    }
    if (n == 3) {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            out.push_back({rho * std::cos(golden * i), rho * std::sin(golden * i), z});
        }
        return out;
    }
    static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n > 12) throw std::invalid_argument("beta_numbers: n > 12 not supported");
    for (int i = 0; i < count; ++i) {
        std::vector<double> u(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double p = radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[k]);
            u[static_cast<std::size_t>(k)] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
        }
        const double len = std::sqrt(norm2(u));
        for (double& v : u) v /= len;
        out.push_back(std::move(u));
    }
    return out;
}

const std::vector<std::vector<double>>& normal_grid(int n, int count)
{
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::vector<std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({n, count});
    if (it == cache.end()) it = cache.emplace(std::make_pair(n, count), build_normal_grid(n, count)).first;
    return it->second;
}

// Width and midrange of <u, p_H> over the horizontal parts P (row-major, m x n).
std::pair<double, double> width_of(const std::vector<double>& P, int n, const std::vector<double>& u)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const std::size_t m = P.size() / static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += u[static_cast<std::size_t>(k)] * P[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {hi - lo, 0.5 * (hi + lo)};
}

std::vector<double> normalized(std::vector<double> u)
{
    const double len = std::sqrt(norm2(u));
    for (double& v : u) v /= len;
    return u;
}

// Pattern search on the sphere starting from u with initial step delta.
std::vector<double> refine_normal(const std::vector<double>& P, int n, std::vector<double> u, double delta, int steps,
                                  double& width)
{
    width = width_of(P, n, u).first;
    if (n == 1) return u;
    for (int s = 0; s < steps; ++s) {
        bool moved = false;
        const auto basis = orthonormal_complement(u);
        for (const auto& e : basis) {
            for (double sgn : {-1.0, 1.0}) {
                std::vector<double> v = u;
                for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] += sgn * delta * e[static_cast<std::size_t>(k)];
                v = normalized(std::move(v));
                const double w = width_of(P, n, v).first;
                if (w < width) {
                    width = w;
                    u = std::move(v);
                    moved = true;
                }
            }
        }
        if (!moved) delta *= 0.5;
    }
    return u;
}

// sup over stratified points y of V cap B(center, r) of dist(y, supp)/r. Stops early once above `cap`.
double plane_term(const detail::SpatialIndex& index, const Point& center, double r, const std::vector<double>& u, double c,
                  int samples, std::uint64_t seed, double cap)
{
    const int n = center.dim();
    const double d = c - dot(u, center.h);
    if (std::abs(d) > r) return std::numeric_limits<double>::infinity();
    const auto basis = orthonormal_complement(u);
    const double r2 = r * r, r4 = r2 * r2;
    std::vector<double> y(static_cast<std::size_t>(n + 1));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double sup = 0.0;
    int m = std::max(2, static_cast<int>(std::ceil(std::pow(static_cast<double>(samples), 1.0 / n))));
    for (;; ++m) {
        int accepted = 0;
        std::vector<int> cell(static_cast<std::size_t>(n), 0);
        std::size_t total = 1;
        for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(m);
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            for (int k = 0; k < n; ++k) {
                cell[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(m));
                rem /= static_cast<std::size_t>(m);
            }
            // coordinates in [-1,1]^n: first n-1 along the plane, last for time
            double a2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double x = -1.0 + 2.0 * (cell[static_cast<std::size_t>(k)] + unif(rng)) / m;
                if (k < n - 1) {
                    y[static_cast<std::size_t>(k)] = x * r; // temporarily store plane coordinates
                    a2 += x * x * r2;
                } else {
                    y[static_cast<std::size_t>(n)] = x * r2;
                }
            }
            const double tau = y[static_cast<std::size_t>(n)];
            const double h2 = d * d + a2;
            if (h2 * h2 + tau * tau > r4) continue;
            ++accepted;
            std::vector<double> a(y.begin(), y.begin() + (n - 1));
            for (int k = 0; k < n; ++k) {
                double v = center.h[static_cast<std::size_t>(k)] + d * u[static_cast<std::size_t>(k)];
                for (int b = 0; b < n - 1; ++b) v += a[static_cast<std::size_t>(b)] * basis[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
                y[static_cast<std::size_t>(k)] = v;
            }
            y[static_cast<std::size_t>(n)] = center.t + tau;
            sup = std::max(sup, index.nearest(y.data()).second / r);
            if (sup >= cap) return sup;
        }
        if (accepted >= samples) break;
    }
    return sup;
}

} // namespace

namespace detail {

BetaPair beta_with_index(const SpatialIndex& index, const Point& center, double r, const BetaOptions& opts)
{
    if (!(r > 0.0)) throw std::invalid_argument("beta_numbers: r must be positive");
    const ParticleMeasure& mu = index.measure();
    const int n = mu.n;
    if (center.dim() != n) throw std::invalid_argument("beta_numbers: dimension mismatch");
    std::vector<double> q(center.h);
    q.push_back(center.t);
    std::vector<double> P;
    std::size_t count = 0;
    index.for_each_in_ball(q.data(), r, [&](std::size_t i, double) {
        const double* p = mu.atom(i);
        P.insert(P.end(), p, p + n);
        ++count;
    });
    if (count == 0) throw std::invalid_argument("beta_numbers: empty ball");

    const int grid_size = n == 1 ? 1 : (1 << n) * opts.grid_factor;
    const auto& grid = normal_grid(n, grid_size);
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) ranked.push_back({width_of(P, n, grid[g]).first, g});
    std::sort(ranked.begin(), ranked.end());

    const double spacing = n == 1 ? 0.0 : std::pow(sphere_area(n - 1) / grid_size, 1.0 / (n - 1));
    const std::size_t want = static_cast<std::size_t>(std::max(1, opts.bbeta_candidates));
    std::vector<std::vector<double>> candidates;
    for (const auto& [w, g] : ranked) {
        if (candidates.size() >= want) break;
        bool distinct = true;
        for (const auto& c : candidates) {
            if (std::abs(dot(c, grid[g])) > std::cos(2.0 * spacing)) distinct = false;
        }
        if (distinct) candidates.push_back(grid[g]);
    }
    if (n > 1) {
        // least-variance direction: exact normal when the atoms lie on one vertical plane
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(P.data(), static_cast<Eigen::Index>(count), n);
        const Eigen::MatrixXd C = M.rowwise() - M.colwise().mean();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C.transpose() * C);
        const Eigen::VectorXd v = es.eigenvectors().col(0);
        candidates.emplace_back(v.data(), v.data() + n);
    }

    BetaPair out;
    out.atoms_in_ball = count;
    out.beta = std::numeric_limits<double>::infinity();
    struct Refined {
        std::vector<double> u;
        double width, mid;
    };
    std::vector<Refined> refined;
    for (const auto& u0 : candidates) {
        double w = 0.0;
        auto u = refine_normal(P, n, u0, spacing, opts.refine_steps, w);
        const auto [w2, mid] = width_of(P, n, u);
        refined.push_back({u, w2, mid});
        if (w2 / (2.0 * r) < out.beta) {
            out.beta = w2 / (2.0 * r);
            out.best_plane = VerticalHyperplane(u, mid);
        }
    }
    std::sort(refined.begin(), refined.end(), [](const Refined& a, const Refined& b) { return a.width < b.width; });
    out.bbeta = std::numeric_limits<double>::infinity();
    for (const auto& c : refined) {
        const double wt = c.width / (2.0 * r);
        if (wt >= out.bbeta) break;
        const double pt = plane_term(index, center, r, c.u, c.mid, opts.plane_samples, opts.seed, out.bbeta - wt);
        if (wt + pt < out.bbeta) out.bbeta = wt + pt;
    }
    return out;
}

} // namespace detail

BetaPair beta_numbers(const ParticleMeasure& mu, const Point& center, double r, const BetaOptions& opts)
{
    detail::SpatialIndex index(mu);
    return detail::beta_with_index(index, center, r, opts);
}

WcdResult wcd_probe(const ParticleMeasure& mu, const Point& x, double r, double eps, const WcdOptions& opts)
{
    if (!(r > 0.0)) throw std::invalid_argument("wcd_probe: r must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("wcd_probe: eps must be positive");
    const int n = mu.n;
    detail::SpatialIndex index(mu);
    std::vector<double> q(x.h);
    q.push_back(x.t);
    const auto local = index.in_ball(q.data(), r);
    if (local.empty()) throw std::invalid_argument("wcd_probe: ball misses the support");
    const double hom = n + 1.0;

    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, local.size() - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&](std::vector<std::pair<std::size_t, double>>& out) {
        out.clear();
        for (int i = 0; i < opts.samples; ++i) {
            const std::size_t a = local[pick(rng)];
            const double t = r * (1.0 - unif(rng)); // (0, r]
            out.push_back({a, t});
        }
    };

    std::vector<std::pair<std::size_t, double>> pairs;
    draw(pairs);
    double num = 0.0, den = 0.0;
    for (const auto& [a, t] : pairs) {
        num += index.mass_in_ball(mu.atom(a), t);
        den += std::pow(t, hom);
    }
    WcdResult res;
    res.theta = num / den;

    draw(pairs);
    const double scale = std::pow(r, hom);
    for (const auto& [a, t] : pairs) {
        const double sigma = index.mass_in_ball(mu.atom(a), t) / res.theta;
        const double dev = std::abs(sigma - std::pow(t, hom)) / scale;
        if (dev >= res.worst_deviation) {
            res.worst_deviation = dev;
            res.worst_center = mu.point(a);
            res.worst_radius = t;
        }
    }
    res.pass = res.worst_deviation <= eps;
    return res;
}

ROperatorResult r_operator(const ParticleMeasure& mu, const Point& z, double r, double s)
{
    if (!(r > 0.0)) throw std::invalid_argument("r_operator: r must be positive");
    if (r > s) throw std::invalid_argument("r_operator: requires r <= s");
    const int n = mu.n;
    if (z.dim() != n) throw std::invalid_argument("r_operator: dimension mismatch");
    ROperatorResult out;
    out.value.assign(static_cast<std::size_t>(n), 0.0);
    out.std_error.assign(static_cast<std::size_t>(n), 0.0);
    if (r == s) return out;
    const auto est = weighted_estimates(mu, n, [&](const double* p, double* v) {
        double h2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double d = z.h[static_cast<std::size_t>(k)] - p[k];
            h2 += d * d;
        }
        const double dt = z.t - p[n];
        const double dist = hom_norm(h2, dt, Metric::Koranyi);
        if (dist <= r || dist > s) {
            std::fill(v, v + n, 0.0);
            return;
        }
        const double f = h2 / std::pow(dist, n + 4);
        for (int k = 0; k < n; ++k) v[k] = f * (z.h[static_cast<std::size_t>(k)] - p[k]);
    });
    for (int k = 0; k < n; ++k) {
        out.value[static_cast<std::size_t>(k)] = est[static_cast<std::size_t>(k)].value;
        out.std_error[static_cast<std::size_t>(k)] = est[static_cast<std::size_t>(k)].std_error;
    }
    return out;
}

double touching_point_sup(const ParticleMeasure& mu, const Point& z, double r, double s)
{
    const auto R = r_operator(mu, z, r, s);
    const int n = mu.n;
    double sup = 0.0;
    std::vector<double> zq(z.h);
    zq.push_back(z.t);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(mu.weights[i] > 0.0)) continue;
        const double* p = mu.atom(i);
        if (distance_raw(zq.data(), p, n, Metric::Koranyi) > r) continue;
        double ip = 0.0;
        for (int k = 0; k < n; ++k) ip += (p[k] - z.h[static_cast<std::size_t>(k)]) / r * R.value[static_cast<std::size_t>(k)];
        sup = std::max(sup, std::abs(ip));
    }
    return sup;
}

SquareFunctionResult density_square_function(const ParticleMeasure& mu, const Point& x, double R, double q,
                                             const SquareFunctionOptions& opts)
{
    if (!(q > 0.0)) throw std::invalid_argument("density_square_function: q must be positive");
    if (!(R > 0.0)) throw std::invalid_argument("density_square_function: R must be positive");
    if (opts.nodes_per_decade < 1) throw std::invalid_argument("density_square_function: nodes_per_decade < 1");
    const int n = mu.n;
    const double hom = n + 1.0;
    SquareFunctionResult out;
    std::vector<double> xq(x.h);
    xq.push_back(x.t);
    if (opts.r_min > 0.0) {
        out.r_min = opts.r_min;
    } else {
        detail::SpatialIndex index(mu);
        if (index.size() == 0) throw std::invalid_argument("density_square_function: empty support");
        out.r_min = index.kth_distance(xq.data(), static_cast<std::size_t>(std::max(1, opts.resolution_atoms)));
    }
    for (int k = 0;; ++k) {
        const double rk = R * std::pow(10.0, -static_cast<double>(k) / opts.nodes_per_decade);
        if (rk < out.r_min) break;
        out.radii.push_back(rk);
    }
    if (out.radii.size() < 2) return out;
    std::vector<double> se;
    for (double rk : out.radii) {
        const double a = 1.0 / std::pow(rk, hom), b = 1.0 / std::pow(2.0 * rk, hom);
        const auto e = weighted_estimate(mu, [&](const double* p) {
            const double d = distance_raw(xq.data(), p, n, Metric::Koranyi);
            return (d <= rk ? a : 0.0) - (d <= 2.0 * rk ? b : 0.0);
        });
        out.differences.push_back(e.value);
        se.push_back(e.std_error);
    }
    // trapezoid rule in log r
    const double dlog = std::log(10.0) / opts.nodes_per_decade;
    for (std::size_t k = 0; k < out.radii.size(); ++k) {
        const double wk = (k == 0 || k + 1 == out.radii.size()) ? 0.5 * dlog : dlog;
        out.value += wk * std::pow(std::abs(out.differences[k]), q);
        out.noise_floor += wk * std::pow(3.0 * se[k], q);
    }
    return out;
}

} // namespace pgmt
