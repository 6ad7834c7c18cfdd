#pragma once

#include "pgmt/measures.hpp"

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace pgmt::detail {

// k-d tree over the positive-weight atoms of a particle measure. Box lower bounds are valid for
// both homogeneous metrics since they are monotone in |dh_i| and |dt|.
class SpatialIndex {
public:
    SpatialIndex(const ParticleMeasure& mu, Metric m = Metric::Koranyi);

    const ParticleMeasure& measure() const { return *mu_; }
    std::size_t size() const { return ids_.size(); }

    // fn(atom index, distance) for every indexed atom with distance <= r.
    void for_each_in_ball(const double* q, double r, const std::function<void(std::size_t, double)>& fn) const;
    std::vector<std::size_t> in_ball(const double* q, double r) const;
    double mass_in_ball(const double* q, double r) const;

    // Nearest indexed atom; returns (index, distance). Requires size() > 0.
    std::pair<std::size_t, double> nearest(const double* q) const;

    // Distance to the k-th nearest indexed atom (k >= 1, clamped to size()).
    double kth_distance(const double* q, std::size_t k) const;

private:
    struct Node {
        std::size_t begin = 0, end = 0;
        int left = -1, right = -1;
        std::vector<double> lo, hi;
    };

    int build(std::size_t begin, std::size_t end);
    double lower_bound(const Node& node, const double* q) const;
    void nearest_rec(int node, const double* q, std::size_t& best, double& best_d) const;

    const ParticleMeasure* mu_;
    Metric metric_;
    int d_;
    std::vector<std::size_t> ids_;
    std::vector<Node> nodes_;
};

} // namespace pgmt::detail
