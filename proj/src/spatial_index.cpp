#include "spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace pgmt::detail {

namespace {
constexpr std::size_t kLeafSize = 16;
}

SpatialIndex::SpatialIndex(const ParticleMeasure& mu, Metric m) : mu_(&mu), metric_(m), d_(mu.n + 1)
{
    ids_.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu.weights[i] > 0.0) ids_.push_back(i);
    }
    if (!ids_.empty()) build(0, ids_.size());
}

int SpatialIndex::build(std::size_t begin, std::size_t end)
{
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(d_, std::numeric_limits<double>::infinity());
    node.hi.assign(d_, -std::numeric_limits<double>::infinity());
    for (std::size_t k = begin; k < end; ++k) {
        const double* p = mu_->atom(ids_[k]);
        for (int c = 0; c < d_; ++c) {
            node.lo[c] = std::min(node.lo[c], p[c]);
            node.hi[c] = std::max(node.hi[c], p[c]);
        }
    }
    if (end - begin > kLeafSize) {
        // split the axis with the largest extent in homogeneous units
        int axis = 0;
        double spread = -1.0;
        for (int c = 0; c < d_; ++c) {
            double e = node.hi[c] - node.lo[c];
            if (c == d_ - 1) e = std::sqrt(e);
            if (e > spread) {
                spread = e;
                axis = c;
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(ids_.begin() + static_cast<std::ptrdiff_t>(begin), ids_.begin() + static_cast<std::ptrdiff_t>(mid),
                         ids_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return mu_->atom(a)[axis] < mu_->atom(b)[axis];
                         });
        node.left = build(begin, mid);
        node.right = build(mid, end);
    }
    nodes_[static_cast<std::size_t>(id)] = std::move(node);
    return id;
}

double SpatialIndex::lower_bound(const Node& node, const double* q) const
{
    double h2 = 0.0;
    for (int c = 0; c < d_ - 1; ++c) {
        const double g = std::max({0.0, node.lo[c] - q[c], q[c] - node.hi[c]});
        h2 += g * g;
    }
    const int c = d_ - 1;
    const double gt = std::max({0.0, node.lo[c] - q[c], q[c] - node.hi[c]});
    return hom_norm(h2, gt, metric_);
}

void SpatialIndex::for_each_in_ball(const double* q, double r, const std::function<void(std::size_t, double)>& fn) const
{
    if (ids_.empty()) return;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (lower_bound(node, q) > r) continue;
        if (node.left < 0) {
            for (std::size_t k = node.begin; k < node.end; ++k) {
                const double dist = distance_raw(q, mu_->atom(ids_[k]), d_ - 1, metric_);
                if (dist <= r) fn(ids_[k], dist);
            }
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
}

std::vector<std::size_t> SpatialIndex::in_ball(const double* q, double r) const
{
    std::vector<std::size_t> out;
    for_each_in_ball(q, r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
}

double SpatialIndex::mass_in_ball(const double* q, double r) const
{
    double m = 0.0;
    for_each_in_ball(q, r, [&](std::size_t i, double) { m += mu_->weights[i]; });
    return m;
}

void SpatialIndex::nearest_rec(int id, const double* q, std::size_t& best, double& best_d) const
{
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (lower_bound(node, q) >= best_d) return;
    if (node.left < 0) {
        for (std::size_t k = node.begin; k < node.end; ++k) {
            const double dist = distance_raw(q, mu_->atom(ids_[k]), d_ - 1, metric_);
            if (dist < best_d) {
                best_d = dist;
                best = ids_[k];
            }
        }
        return;
    }
    const double bl = lower_bound(nodes_[static_cast<std::size_t>(node.left)], q);
    const double br = lower_bound(nodes_[static_cast<std::size_t>(node.right)], q);
    if (bl <= br) {
        nearest_rec(node.left, q, best, best_d);
        nearest_rec(node.right, q, best, best_d);
    } else {
        nearest_rec(node.right, q, best, best_d);
        nearest_rec(node.left, q, best, best_d);
    }
}

std::pair<std::size_t, double> SpatialIndex::nearest(const double* q) const
{
    if (ids_.empty()) throw std::invalid_argument("nearest: empty index");
    std::size_t best = ids_.front();
    double best_d = std::numeric_limits<double>::infinity();
    nearest_rec(0, q, best, best_d);
    return {best, best_d};
}

double SpatialIndex::kth_distance(const double* q, std::size_t k) const
{
    if (ids_.empty()) throw std::invalid_argument("kth_distance: empty index");
    k = std::clamp<std::size_t>(k, 1, ids_.size());
    // best-first search keeping the k smallest distances in a max-heap
    std::priority_queue<double> heap;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
    frontier.push({0.0, 0});
    while (!frontier.empty()) {
        const auto [bound, id] = frontier.top();
        frontier.pop();
        if (heap.size() == k && bound >= heap.top()) break;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.left < 0) {
            for (std::size_t j = node.begin; j < node.end; ++j) {
                const double dist = distance_raw(q, mu_->atom(ids_[j]), d_ - 1, metric_);
                if (heap.size() < k) {
                    heap.push(dist);
                } else if (dist < heap.top()) {
                    heap.pop();
                    heap.push(dist);
                }
            }
        } else {
            frontier.push({lower_bound(nodes_[static_cast<std::size_t>(node.left)], q), node.left});
            frontier.push({lower_bound(nodes_[static_cast<std::size_t>(node.right)], q), node.right});
        }
    }
    return heap.top();
}

} // namespace pgmt::detail
