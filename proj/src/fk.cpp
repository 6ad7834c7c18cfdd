#include "network_simplex.hpp"
#include "pgmt/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace pgmt {

namespace {

// Fixed function class for F_K: grid nodes in K, kNN Lipschitz arcs, boundary caps.
class FkGraph {
public:
    FkGraph(std::vector<std::vector<double>> nodes, const Ball& K, int k) : nodes_(std::move(nodes)), K_(K)
    {
        const int m = static_cast<int>(nodes_.size());
        if (m == 0) throw std::invalid_argument("F_K: no atoms inside K");
        const int n = K.center.dim();
        std::vector<double> c(K.center.h);
        c.push_back(K.center.t);
        cap_.resize(m);
        for (int i = 0; i < m; ++i) {
            const Point g(std::vector<double>(nodes_[i].begin(), nodes_[i].begin() + n), nodes_[i][n]);
            cap_[i] = boundary_distance(g, K.center, K.radius, K.metric);
        }
        std::set<std::pair<int, int>> seen;
        const int kk = std::min(k, m - 1);
        std::vector<std::pair<double, int>> d(static_cast<std::size_t>(m));
        for (int i = 0; i < m && kk > 0; ++i) {
            for (int j = 0; j < m; ++j) {
                d[j] = {j == i ? std::numeric_limits<double>::infinity()
                               : distance_raw(nodes_[i].data(), nodes_[j].data(), n, K.metric),
                        j};
            }
            std::nth_element(d.begin(), d.begin() + (kk - 1), d.end());
            for (int q = 0; q < kk; ++q) {
                const int j = d[q].second;
                const auto key = std::minmax(i, j);
                if (seen.insert(key).second) edges_.push_back({key.first, key.second, d[q].first});
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<std::vector<double>>& nodes() const { return nodes_; }
    std::size_t n_constraints() const { return 2 * edges_.size() + 2 * nodes_.size(); }

    // max over f in the class of sign * sum_i c_i f_i, with the optimal f.
    double solve(const std::vector<double>& c, double sign, std::vector<double>* f_out) const
    {
        const int m = static_cast<int>(nodes_.size());
        detail::NetworkSimplex ns(m + 1);
        const int ground = m;
        for (const auto& e : edges_) {
            ns.add_arc(e.a, e.b, e.d);
            ns.add_arc(e.b, e.a, e.d);
        }
        double total = 0.0;
        for (int i = 0; i < m; ++i) {
            ns.add_arc(i, ground, cap_[i]);
            ns.add_arc(ground, i, 0.0);
            ns.set_supply(i, sign * c[i]);
            total += sign * c[i];
        }
        ns.set_supply(ground, -total);
        if (ns.solve() != detail::NetworkSimplex::Status::Optimal) {
            throw std::logic_error("F_K linear program reported infeasible");
        }
        if (f_out) {
            const auto& pi = ns.potential();
            f_out->resize(m);
            for (int i = 0; i < m; ++i) (*f_out)[i] = pi[ground] - pi[i];
        }
        return ns.total_cost();
    }

private:
    struct Edge {
        int a, b;
        double d;
    };
    std::vector<std::vector<double>> nodes_;
    Ball K_;
    std::vector<double> cap_;
    std::vector<Edge> edges_;
};

using Key = std::vector<double>;

// Index of grid locations inside K; identical coordinates share a node.
struct GridBuilder {
    const Ball& K;
    int n;
    std::vector<double> c;
    std::map<Key, int> index;
    std::vector<Key> nodes;

    explicit GridBuilder(const Ball& K_) : K(K_), n(K_.center.dim()), c(K_.center.h)
    {
        c.push_back(K.center.t);
    }

    int add(const double* a)
    {
        if (distance_raw(c.data(), a, n, K.metric) > K.radius) return -1;
        Key key(a, a + n + 1);
        auto [it, inserted] = index.try_emplace(key, static_cast<int>(nodes.size()));
        if (inserted) nodes.push_back(std::move(key));
        return it->second;
    }
};

void accumulate(GridBuilder& gb, const ParticleMeasure& mu, double sign, std::vector<double>& c)
{
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const int id = gb.add(mu.atom(i));
        if (id < 0) continue;
        if (static_cast<std::size_t>(id) >= c.size()) c.resize(static_cast<std::size_t>(id) + 1, 0.0);
        c[static_cast<std::size_t>(id)] += sign * mu.weights[i];
    }
}

} // namespace

FkResult fk_solve(const ParticleMeasure& phi, const ParticleMeasure& psi, const Ball& K, const FkOptions& opts)
{
    if (phi.n != psi.n || phi.n != K.center.dim()) throw std::invalid_argument("F_K: dimension mismatch");
    if (!(K.radius > 0.0)) throw std::invalid_argument("F_K: ball radius must be positive");
    GridBuilder gb(K);
    std::vector<double> c;
    accumulate(gb, phi, 1.0, c);
    accumulate(gb, psi, -1.0, c);
    for (const Point& p : opts.extra_grid) {
        std::vector<double> a(p.h);
        a.push_back(p.t);
        gb.add(a.data());
    }
    c.resize(gb.nodes.size(), 0.0);
    const FkGraph graph(gb.nodes, K, opts.k_neighbors);

    FkResult res;
    std::vector<double> fp, fm;
    const double vp = graph.solve(c, 1.0, &fp);
    const double vm = graph.solve(c, -1.0, &fm);
    res.value = std::max(0.0, std::max(vp, vm));
    res.sign = vp >= vm ? 1 : -1;
    res.f = vp >= vm ? fp : fm;
    res.n_constraints = graph.n_constraints();
    for (const auto& node : gb.nodes) {
        res.grid.emplace_back(std::vector<double>(node.begin(), node.end() - 1), node.back());
    }
    return res;
}

double fk_distance(const ParticleMeasure& phi, const ParticleMeasure& psi, const Ball& K, const FkOptions& opts)
{
    return fk_solve(phi, psi, K, opts).value;
}

ParticleMeasure flat_lattice(const VerticalHyperplane& V, const Ball& K, int target_points)
{
    const int n = V.dim();
    if (K.center.dim() != n) throw std::invalid_argument("flat_lattice: dimension mismatch");
    if (target_points < 1) throw std::invalid_argument("flat_lattice: target_points must be >= 1");
    const double r = K.radius;
    const double off = dot(V.normal, K.center.h) - V.offset;
    std::vector<double> base(K.center.h);
    for (int i = 0; i < n; ++i) base[i] -= off * V.normal[i];
    const auto basis = orthonormal_complement(V.normal);

    // Roughly half of the parameter box lies in the ball.
    const int m = std::max(2, static_cast<int>(std::ceil(std::pow(2.0 * target_points, 1.0 / n))));
    const double dy = 2.0 * r / m;
    const double dt = 2.0 * r * r / m;
    const double cell = flat_normalization(n) * std::pow(dy, n - 1) * dt;

    std::vector<double> coords, weights;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> pt(static_cast<std::size_t>(n + 1));
    std::vector<double> c(K.center.h);
    c.push_back(K.center.t);
    while (true) {
        for (int i = 0; i < n; ++i) pt[i] = base[i];
        for (int j = 0; j < n - 1; ++j) {
            const double y = -r + (idx[j] + 0.5) * dy;
            for (int i = 0; i < n; ++i) pt[i] += y * basis[j][i];
        }
        pt[n] = K.center.t - r * r + (idx[n - 1] + 0.5) * dt;
        if (distance_raw(c.data(), pt.data(), n, K.metric) <= r) {
            coords.insert(coords.end(), pt.begin(), pt.end());
            weights.push_back(cell);
        }
        int d = 0;
        while (d < n && ++idx[d] == m) idx[d++] = 0;
        if (d == n) break;
    }
    ParticleMeasure out(n, std::move(coords), std::move(weights));
    out.h_dim = n + 1.0;
    return out;
}

namespace {

std::vector<std::vector<double>> coarse_normals(int n, int count)
{
    std::vector<std::vector<double>> out;
    if (n == 1) return {{1.0}};
    if (n == 2) {
        for (int i = 0; i < count; ++i) {
            const double th = M_PI * i / count;
            out.push_back({std::cos(th), std::sin(th)});
        }
        return out;
    }
    // Fibonacci-type points on the upper hemisphere of S^{n-1}: last coordinate from a
    // uniform ladder, remaining directions from a golden-angle spiral in n-1 dimensions.
    std::mt19937_64 rng(0x666c6174ULL + static_cast<std::uint64_t>(n));
    std::normal_distribution<double> nd;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        std::vector<double> u(static_cast<std::size_t>(n));
        const double z = (i + 0.5) / count;
        const double rad = std::sqrt(1.0 - z * z);
        if (n == 3) {
            u = {rad * std::cos(golden * i), rad * std::sin(golden * i), z};
        } else {
            double s = 0.0;
            for (int j = 0; j < n - 1; ++j) {
                u[j] = nd(rng);
                s += u[j] * u[j];
            }
            s = std::sqrt(s);
            for (int j = 0; j < n - 1; ++j) u[j] *= rad / s;
            u[n - 1] = z;
        }
        out.push_back(u);
    }
    return out;
}

std::vector<double> normalized(std::vector<double> u)
{
    const double s = std::sqrt(norm2(u));
    for (double& v : u) v /= s;
    return u;
}

} // namespace

FlatDistanceResult flat_distance(const ParticleMeasure& phi, const Point& x, double r, int h,
                                 const FlatDistanceOptions& opts)
{
    const int n = phi.n;
    if (h != n + 1) throw std::invalid_argument("flat_distance supports h = n + 1 only");
    if (!(r > 0.0)) throw std::invalid_argument("flat_distance radius must be positive");
    if (x.dim() != n) throw std::invalid_argument("flat_distance: dimension mismatch");
    const Ball K{x, r, opts.metric};

    // Data atoms in K, merged onto at most max_data_points centres.
    std::vector<double> c(x.h);
    c.push_back(x.t);
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi.weights[i] > 0.0 && distance_raw(c.data(), phi.atom(i), n, opts.metric) <= r) inside.push_back(i);
    }
    if (inside.empty()) throw std::invalid_argument("flat_distance: no atoms inside the ball");
    ParticleMeasure data;
    data.n = n;
    const std::size_t cap = static_cast<std::size_t>(std::max(1, opts.max_data_points));
    if (inside.size() <= cap) {
        for (std::size_t i : inside) {
            data.coords.insert(data.coords.end(), phi.atom(i), phi.atom(i) + n + 1);
            data.weights.push_back(phi.weights[i]);
        }
    } else {
        const double stride = static_cast<double>(inside.size()) / static_cast<double>(cap);
        std::vector<std::size_t> centres;
        for (std::size_t q = 0; q < cap; ++q) centres.push_back(inside[static_cast<std::size_t>(q * stride)]);
        data.weights.assign(cap, 0.0);
        for (std::size_t q = 0; q < cap; ++q) {
            data.coords.insert(data.coords.end(), phi.atom(centres[q]), phi.atom(centres[q]) + n + 1);
        }
        for (std::size_t i : inside) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < cap; ++q) {
                const double d = distance_raw(phi.atom(i), data.atom(q), n, opts.metric);
                if (d < bd) {
                    bd = d;
                    best = q;
                }
            }
            data.weights[best] += phi.weights[i];
        }
    }
    const double data_mass = std::accumulate(data.weights.begin(), data.weights.end(), 0.0);

    FlatDistanceResult best;
    best.value = std::numeric_limits<double>::infinity();
    const double norm_scale = std::pow(r, h + 1);

    auto evaluate = [&](const std::vector<double>& u, double* lambda_out) {
        const VerticalHyperplane V(u, dot(u, x.h));
        const ParticleMeasure lat = flat_lattice(V, K, opts.flat_points);
        GridBuilder gb(K);
        std::vector<double> cd, cl;
        accumulate(gb, data, 1.0, cd);
        accumulate(gb, lat, 1.0, cl);
        cd.resize(gb.nodes.size(), 0.0);
        cl.resize(gb.nodes.size(), 0.0);
        const FkGraph graph(gb.nodes, K, opts.k_neighbors);
        const double lat_mass = std::accumulate(cl.begin(), cl.end(), 0.0);
        std::vector<double> cc(cd.size());
        // F(lambda) is the maximum of the affine maps lambda -> +-(<f, cd> - lambda <f, cl>) over the
        // finitely many vertices of the function class, so Kelley's cutting-plane method terminates.
        std::vector<std::pair<double, double>> lines; // value = p + q * lambda
        std::vector<double> f;
        auto F = [&](double lam) {
            for (std::size_t i = 0; i < cc.size(); ++i) cc[i] = cd[i] - lam * cl[i];
            double v = 0.0;
            for (double sign : {1.0, -1.0}) {
                v = std::max(v, graph.solve(cc, sign, &f));
                double a = 0.0, b = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i) {
                    a += f[i] * cd[i];
                    b += f[i] * cl[i];
                }
                lines.push_back({sign * a, -sign * b});
                best.lp_solves += 1;
            }
            return v;
        };
        auto model = [&](double lam) {
            double v = 0.0;
            for (const auto& [p, q] : lines) v = std::max(v, p + q * lam);
            return v;
        };
        const double hi = 3.0 * data_mass / lat_mass + 0.1;
        double lam_best = std::min(hi, data_mass / lat_mass);
        double f_best = F(lam_best);
        const double tol = 1e-12 * std::max(data_mass, lat_mass) * r + 1e-300;
        for (const double end : {0.0, hi}) {
            const double v = F(end);
            if (v < f_best) {
                f_best = v;
                lam_best = end;
            }
        }
        for (int it = 0; it < opts.lambda_iterations; ++it) {
            // minimiser of the piecewise-linear lower model over [0, hi]
            std::vector<double> cand = {0.0, hi};
            for (std::size_t i = 0; i < lines.size(); ++i) {
                for (std::size_t j = i + 1; j < lines.size(); ++j) {
                    const double dq = lines[i].second - lines[j].second;
                    if (std::abs(dq) < 1e-300) continue;
                    const double l = (lines[j].first - lines[i].first) / dq;
                    if (l > 0.0 && l < hi) cand.push_back(l);
                }
            }
            double lam_next = 0.0, m_next = std::numeric_limits<double>::infinity();
            for (double l : cand) {
                const double v = model(l);
                if (v < m_next) {
                    m_next = v;
                    lam_next = l;
                }
            }
            if (f_best - m_next <= tol) break;
            const double v = F(lam_next);
            if (v < f_best) {
                f_best = v;
                lam_best = lam_next;
            }
        }
        *lambda_out = lam_best;
        return f_best / norm_scale;
    };

    std::vector<double> u_best;
    for (const auto& u : coarse_normals(n, std::max(1, opts.coarse_normals))) {
        double lam = 0.0;
        const double v = evaluate(u, &lam);
        if (v < best.value) {
            best.value = v;
            best.lambda = lam;
            u_best = u;
        }
    }
    if (n >= 2) {
        const auto tangents_of = [](const std::vector<double>& u) { return orthonormal_complement(u); };
        double step = M_PI / std::max(2, opts.coarse_normals);
        for (int it = 0; it < opts.refine_steps; ++it) {
            bool improved = false;
            for (const auto& e : tangents_of(u_best)) {
                for (double s : {-1.0, 1.0}) {
                    std::vector<double> u(u_best);
                    for (int i = 0; i < n; ++i) u[i] = std::cos(step) * u_best[i] + s * std::sin(step) * e[i];
                    u = normalized(u);
                    double lam = 0.0;
                    const double v = evaluate(u, &lam);
                    if (v < best.value) {
                        best.value = v;
                        best.lambda = lam;
                        u_best = u;
                        improved = true;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
    }
    best.plane = VerticalHyperplane(u_best, dot(u_best, x.h));
    return best;
}

} // namespace pgmt
