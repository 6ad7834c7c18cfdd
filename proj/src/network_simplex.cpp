#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace pgmt::detail {

NetworkSimplex::NetworkSimplex(int nodes) : n_(nodes), supply_(static_cast<std::size_t>(nodes), 0.0)
{
    if (nodes < 1) throw std::invalid_argument("NetworkSimplex needs at least one node");
}

int NetworkSimplex::add_arc(int from, int to, double cost)
{
    if (from < 0 || from >= n_ || to < 0 || to >= n_) throw std::out_of_range("arc endpoint out of range");
    if (!std::isfinite(cost)) throw std::invalid_argument("arc cost must be finite");
    src_.push_back(from);
    dst_.push_back(to);
    cost_.push_back(cost);
    return m_real_++;
}

void NetworkSimplex::set_supply(int node, double value)
{
    supply_.at(static_cast<std::size_t>(node)) = value;
}

double NetworkSimplex::total_cost() const
{
    double s = 0.0;
    for (int a = 0; a < m_real_; ++a) s += cost_[a] * flow_[a];
    return s;
}

void NetworkSimplex::rebuild_tree()
{
    const int N = n_ + 1;
    const int root = n_;
    std::fill(parent_.begin(), parent_.end(), -1);
    parent_[root] = root;
    pred_arc_[root] = -1;
    depth_[root] = 0;
    pi_[root] = 0.0;
    std::deque<int> queue{root};
    int seen = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int a : tree_adj_[u]) {
            const int v = src_[a] == u ? dst_[a] : src_[a];
            if (parent_[v] != -1) continue;
            parent_[v] = u;
            pred_arc_[v] = a;
            depth_[v] = depth_[u] + 1;
            pi_[v] = src_[a] == u ? pi_[u] + cost_[a] : pi_[u] - cost_[a];
            queue.push_back(v);
            ++seen;
        }
    }
    if (seen != N) throw std::logic_error("network simplex: spanning tree lost connectivity");
}

// Detach the subtree below the leaving arc and hang it from the entering arc, updating
// parents, depths and potentials of that subtree only.
void NetworkSimplex::rehang(int entering, int leaving)
{
    const int q = parent_[src_[leaving]] == dst_[leaving] && pred_arc_[src_[leaving]] == leaving ? src_[leaving]
                                                                                                   : dst_[leaving];
    // the entering endpoint inside the detached subtree
    int s = src_[entering];
    bool below = false;
    for (int w = s;; w = parent_[w]) {
        if (w == q) {
            below = true;
            break;
        }
        if (w == parent_[w]) break;
    }
    if (!below) s = dst_[entering];
    const int t = s == src_[entering] ? dst_[entering] : src_[entering];

    int prev = t, prev_arc = entering, w = s;
    while (true) {
        const int next = parent_[w];
        const int next_arc = pred_arc_[w];
        parent_[w] = prev;
        pred_arc_[w] = prev_arc;
        if (w == q) break;
        prev = w;
        prev_arc = next_arc;
        w = next;
    }

    stack_.clear();
    stack_.push_back(s);
    while (!stack_.empty()) {
        const int u = stack_.back();
        stack_.pop_back();
        const int a = pred_arc_[u];
        const int p = parent_[u];
        depth_[u] = depth_[p] + 1;
        pi_[u] = src_[a] == p ? pi_[p] + cost_[a] : pi_[p] - cost_[a];
        for (int b : tree_adj_[u]) {
            if (b == a) continue;
            stack_.push_back(src_[b] == u ? dst_[b] : src_[b]);
        }
    }
}

NetworkSimplex::Status NetworkSimplex::solve()
{
    const int root = n_;
    const int N = n_ + 1;
    double supply_sum = 0.0, supply_abs = 0.0, max_cost = 0.0;
    for (double s : supply_) {
        supply_sum += s;
        supply_abs += std::abs(s);
    }
    if (std::abs(supply_sum) > 1e-9 * std::max(1.0, supply_abs)) {
        throw std::invalid_argument("network simplex: supplies do not balance");
    }
    for (int a = 0; a < m_real_; ++a) max_cost = std::max(max_cost, std::abs(cost_[a]));
    const double big = 1.0 + static_cast<double>(N) * std::max(1.0, max_cost);

    src_.resize(static_cast<std::size_t>(m_real_));
    dst_.resize(static_cast<std::size_t>(m_real_));
    cost_.resize(static_cast<std::size_t>(m_real_));
    flow_.assign(static_cast<std::size_t>(m_real_), 0.0);
    in_tree_.assign(static_cast<std::size_t>(m_real_), 0);
    tree_adj_.assign(static_cast<std::size_t>(N), {});
    for (int v = 0; v < n_; ++v) {
        const int a = static_cast<int>(src_.size());
        if (supply_[v] >= 0.0) {
            src_.push_back(v);
            dst_.push_back(root);
            flow_.push_back(supply_[v]);
        } else {
            src_.push_back(root);
            dst_.push_back(v);
            flow_.push_back(-supply_[v]);
        }
        cost_.push_back(big);
        in_tree_.push_back(1);
        tree_adj_[v].push_back(a);
        tree_adj_[root].push_back(a);
    }
    parent_.assign(static_cast<std::size_t>(N), -1);
    pred_arc_.assign(static_cast<std::size_t>(N), -1);
    depth_.assign(static_cast<std::size_t>(N), 0);
    pi_.assign(static_cast<std::size_t>(N), 0.0);
    rebuild_tree();

    const int M = static_cast<int>(src_.size());
    const int block = std::max(16, static_cast<int>(std::sqrt(static_cast<double>(M))));
    const double tol = 1e-11 * big;
    int next = 0;
    pivots_ = 0;

    while (true) {
        int entering = -1;
        double best = -tol;
        int scanned = 0;
        int in_block = 0;
        while (scanned < M) {
            const int a = next;
            next = next + 1 == M ? 0 : next + 1;
            ++scanned;
            ++in_block;
            if (!in_tree_[a]) {
                const double rc = cost_[a] + pi_[src_[a]] - pi_[dst_[a]];
                if (rc < best) {
                    best = rc;
                    entering = a;
                }
            }
            if (in_block >= block) {
                if (entering >= 0) break;
                in_block = 0;
            }
        }
        if (entering < 0) break;

        const int i = src_[entering];
        const int j = dst_[entering];
        int u = i, v = j;
        while (u != v) {
            if (depth_[u] >= depth_[v]) {
                u = parent_[u];
            } else {
                v = parent_[v];
            }
        }
        const int apex = u;

        double delta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (int w = i; w != apex; w = parent_[w]) {
            const int a = pred_arc_[w];
            if (src_[a] == w && flow_[a] < delta) {
                delta = flow_[a];
                leaving = a;
            }
        }
        for (int w = j; w != apex; w = parent_[w]) {
            const int a = pred_arc_[w];
            if (dst_[a] == w && flow_[a] <= delta) {
                delta = flow_[a];
                leaving = a;
            }
        }
        if (leaving < 0) throw std::logic_error("network simplex: unbounded cycle (negative cost cycle)");

        if (delta > 0.0) {
            flow_[entering] += delta;
            for (int w = i; w != apex; w = parent_[w]) {
                const int a = pred_arc_[w];
                flow_[a] += src_[a] == w ? -delta : delta;
            }
            for (int w = j; w != apex; w = parent_[w]) {
                const int a = pred_arc_[w];
                flow_[a] += dst_[a] == w ? -delta : delta;
            }
        }
        flow_[leaving] = 0.0;

        in_tree_[leaving] = 0;
        for (int end : {src_[leaving], dst_[leaving]}) {
            auto& adj = tree_adj_[end];
            adj.erase(std::find(adj.begin(), adj.end(), leaving));
        }
        in_tree_[entering] = 1;
        tree_adj_[i].push_back(entering);
        tree_adj_[j].push_back(entering);
        if (leaving != entering) rehang(entering, leaving);
        ++pivots_;
    }

    for (int a = m_real_; a < M; ++a) {
        if (flow_[a] > 1e-9 * std::max(1.0, supply_abs)) return Status::Infeasible;
    }
    return Status::Optimal;
}

} // namespace pgmt::detail
