#include "pgmt/rectifiability.hpp"

#include "rectifiability_internal.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pgmt {

namespace {

using Key = std::vector<std::int64_t>;

// Parabolic boxes of horizontal side l/kappa and vertical side (l/kappa)^2 have Koranyi diameter l.
double box_scale(int n)
{
    return std::pow(static_cast<double>(n) * n + 1.0, 0.25);
}

Key deepest_key(const double* p, int n, int J, double kappa)
{
    Key k(static_cast<std::size_t>(n + 1));
    for (int c = 0; c < n; ++c) k[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(std::floor(std::ldexp(p[c] * kappa, J)));
    k[static_cast<std::size_t>(n)] = static_cast<std::int64_t>(std::floor(std::ldexp(p[n] * kappa * kappa, 2 * J)));
    return k;
}

// Ancestor key `up` generations above; >> on signed values rounds toward -inf.
Key ancestor(const Key& k, int up)
{
    Key a(k);
    const std::size_t n = k.size() - 1;
    for (std::size_t c = 0; c < n; ++c) a[c] = k[c] >> up;
    a[n] = k[n] >> (2 * up);
    return a;
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

} // namespace

std::vector<int> CubeTree::generation(int j) const
{
    std::vector<int> out;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (cubes[i].generation == j) out.push_back(static_cast<int>(i));
    }
    return out;
}

CubeTree dyadic_decompose(const ParticleMeasure& mu, int depth, const DyadicOptions& opts)
{
    if (depth < 1) throw std::invalid_argument("dyadic_decompose: depth must be >= 1");
    if (opts.core < 0) throw std::invalid_argument("dyadic_decompose: core must be >= 0");
    const int n = mu.n;
    const int J = opts.j0 + depth;
    const double kappa = box_scale(n);

    CubeTree tree;
    tree.n = n;
    tree.j0 = opts.j0;
    tree.depth = depth;

    std::vector<std::size_t> atoms;
    std::vector<Key> keys;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(mu.weights[i] > 0.0)) continue;
        Key k = deepest_key(mu.atom(i), n, J, kappa);
        if (opts.core > 0) {
            const Key root = ancestor(k, depth);
            const bool inside = std::all_of(root.begin(), root.end(),
                                            [&](std::int64_t v) { return v >= -opts.core && v < opts.core; });
            if (!inside) continue;
        }
        atoms.push_back(i);
        keys.push_back(std::move(k));
    }
    tree.decomposed_atoms = atoms.size();

    detail::SpatialIndex index(mu);
    std::map<Key, int> previous;
    for (int j = opts.j0; j <= J; ++j) {
        std::map<Key, int> current;
        const double side = std::ldexp(1.0, -j);
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            const Key k = ancestor(keys[a], J - j);
            auto it = current.find(k);
            if (it == current.end()) {
                Cube c;
                c.generation = j;
                c.index = k;
                c.side = side;
                if (j > opts.j0) c.parent = previous.at(ancestor(k, 1));
                const int id = static_cast<int>(tree.cubes.size());
                tree.cubes.push_back(std::move(c));
                if (j > opts.j0) tree.cubes[static_cast<std::size_t>(tree.cubes.back().parent)].children.push_back(id);
                else tree.roots.push_back(id);
                it = current.emplace(k, id).first;
            }
            Cube& c = tree.cubes[static_cast<std::size_t>(it->second)];
            c.atoms.push_back(atoms[a]);
            c.mass += mu.weights[atoms[a]];
        }

        std::vector<int> ids;
        std::vector<double> masses;
        for (const auto& [k, id] : current) {
            ids.push_back(id);
            masses.push_back(tree.cubes[static_cast<std::size_t>(id)].mass);
        }
        const double med = median(masses);
        const double hs = side / kappa, vs = hs * hs;
        for (int id : ids) {
            Cube& c = tree.cubes[static_cast<std::size_t>(id)];
            c.pruned = c.mass < opts.prune_fraction * med;
            // centre: atom nearest the box centre; diameter: Koranyi diameter of the atoms' bounding box
            std::vector<double> box_center(static_cast<std::size_t>(n + 1));
            for (int d = 0; d < n; ++d) box_center[static_cast<std::size_t>(d)] = (static_cast<double>(c.index[static_cast<std::size_t>(d)]) + 0.5) * hs;
            box_center[static_cast<std::size_t>(n)] = (static_cast<double>(c.index[static_cast<std::size_t>(n)]) + 0.5) * vs;
            std::vector<double> lo(static_cast<std::size_t>(n + 1), std::numeric_limits<double>::infinity());
            std::vector<double> hi(static_cast<std::size_t>(n + 1), -std::numeric_limits<double>::infinity());
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_atom = c.atoms.front();
            for (std::size_t a : c.atoms) {
                const double* p = mu.atom(a);
                const double d = distance_raw(box_center.data(), p, n, Metric::Koranyi);
                if (d < best) {
                    best = d;
                    best_atom = a;
                }
                for (int e = 0; e <= n; ++e) {
                    lo[static_cast<std::size_t>(e)] = std::min(lo[static_cast<std::size_t>(e)], p[e]);
                    hi[static_cast<std::size_t>(e)] = std::max(hi[static_cast<std::size_t>(e)], p[e]);
                }
            }
            c.center = mu.point(best_atom);
            double h2 = 0.0;
            for (int e = 0; e < n; ++e) h2 += std::pow(hi[static_cast<std::size_t>(e)] - lo[static_cast<std::size_t>(e)], 2);
            c.diameter = hom_norm(h2, hi[static_cast<std::size_t>(n)] - lo[static_cast<std::size_t>(n)], Metric::Koranyi);

            // inner point: distance from z_Q to the nearest support atom outside Q, capped at l(Q)
            const double* z = mu.atom(best_atom);
            c.inner_radius = side;
            index.for_each_in_ball(z, side, [&](std::size_t a, double d) {
                if (d >= c.inner_radius) return;
                bool outside = opts.core > 0 && !std::binary_search(atoms.begin(), atoms.end(), a);
                if (!outside) outside = ancestor(deepest_key(mu.atom(a), n, J, kappa), J - j) != c.index;
                if (outside) c.inner_radius = d;
            });
        }

        GenerationStats st;
        st.generation = j;
        st.cubes = ids.size();
        const double unit = std::pow(side, n + 1);
        st.min_mass_ratio = st.min_diam_ratio = st.min_inner_ratio = std::numeric_limits<double>::infinity();
        std::vector<double> ratios;
        for (int id : ids) {
            const Cube& c = tree.cubes[static_cast<std::size_t>(id)];
            if (c.pruned) continue;
            ++st.retained;
            const double mr = c.mass / unit;
            ratios.push_back(mr);
            st.min_mass_ratio = std::min(st.min_mass_ratio, mr);
            st.max_mass_ratio = std::max(st.max_mass_ratio, mr);
            st.min_diam_ratio = std::min(st.min_diam_ratio, c.diameter / side);
            st.max_diam_ratio = std::max(st.max_diam_ratio, c.diameter / side);
            st.min_inner_ratio = std::min(st.min_inner_ratio, c.inner_radius / side);
        }
        st.median_mass_ratio = median(ratios);
        if (st.retained == 0) st.min_mass_ratio = st.min_diam_ratio = st.min_inner_ratio = 0.0;
        tree.stats.push_back(st);
        previous = std::move(current);
    }

    if (opts.compute_beta) {
        parallel_for(tree.cubes.size(), opts.jobs, [&](std::size_t i) {
            Cube& c = tree.cubes[i];
            if (c.pruned) return;
            const auto bp = detail::beta_with_index(index, c.center, opts.ball_factor * c.side, opts.beta);
            c.beta = bp.beta;
            c.bbeta = bp.bbeta;
        });
    }
    return tree;
}

std::string to_json_lines(const CubeTree& tree)
{
    std::ostringstream out;
    for (const Cube& c : tree.cubes) {
        nlohmann::json j;
        j["generation"] = c.generation;
        j["index"] = c.index;
        j["center"] = {{"h", c.center.h}, {"t", c.center.t}};
        j["mass"] = c.mass;
        j["side"] = c.side;
        j["atoms"] = c.atoms.size();
        j["parent"] = c.parent;
        j["pruned"] = c.pruned;
        j["beta"] = c.beta ? nlohmann::json(*c.beta) : nlohmann::json(nullptr);
        j["bbeta"] = c.bbeta ? nlohmann::json(*c.bbeta) : nlohmann::json(nullptr);
        out << j.dump() << '\n';
    }
    return out.str();
}

BwglResult carleson_bwgl(const CubeTree& tree, double eta)
{
    if (!(eta > 0.0)) throw std::invalid_argument("carleson_bwgl: eta must be positive");
    BwglResult res;
    for (int root : tree.roots) {
        const Cube& R = tree.cubes[static_cast<std::size_t>(root)];
        if (R.pruned || !(R.mass > 0.0)) continue;
        std::vector<double> profile(static_cast<std::size_t>(tree.depth + 1), 0.0);
        double total = 0.0;
        std::vector<int> stack{root};
        while (!stack.empty()) {
            const Cube& Q = tree.cubes[static_cast<std::size_t>(stack.back())];
            stack.pop_back();
            for (int ch : Q.children) stack.push_back(ch);
            if (Q.pruned) continue;
            if (!Q.bbeta) throw std::invalid_argument("carleson_bwgl: tree has no bbeta values");
            if (*Q.bbeta > eta) {
                total += Q.mass / R.mass;
                profile[static_cast<std::size_t>(Q.generation - tree.j0)] += Q.mass / R.mass;
            }
        }
        if (res.worst_root < 0 || total > res.value) {
            res.value = total;
            res.worst_root = root;
            res.profile = std::move(profile);
        }
    }
    return res;
}

} // namespace pgmt
