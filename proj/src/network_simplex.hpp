#pragma once

#include <cstddef>
#include <vector>

namespace pgmt::detail {

// Uncapacitated min-cost flow (transshipment) by the primal network simplex method with
// a strongly feasible spanning tree.  supply[v] is outflow minus inflow at v and must
// sum to zero.  After solve(), potential() gives duals with cost(u,v) + pi[u] - pi[v] >= 0.
class NetworkSimplex {
public:
    explicit NetworkSimplex(int nodes);

    int add_arc(int from, int to, double cost);
    void set_supply(int node, double value);

    enum class Status { Optimal, Infeasible };
    Status solve();

    double total_cost() const;
    const std::vector<double>& potential() const { return pi_; }
    double flow(int arc) const { return flow_[static_cast<std::size_t>(arc)]; }
    std::size_t pivots() const { return pivots_; }

private:
    void rebuild_tree();
    void rehang(int entering, int leaving);

    int n_;
    int m_real_ = 0;
    std::vector<int> src_, dst_;
    std::vector<double> cost_, flow_, supply_;
    std::vector<char> in_tree_;
    // tree structure
    std::vector<int> parent_, pred_arc_, depth_;
    std::vector<std::vector<int>> tree_adj_;
    std::vector<double> pi_;
    std::vector<int> stack_;
    std::size_t pivots_ = 0;
};

} // namespace pgmt::detail
