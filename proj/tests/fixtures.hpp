#pragma once

// Sample fixtures and brute-force references shared by the unit tests and the acceptance run.

#include "pgmt/core.hpp"
#include "pgmt/measures.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace fixtures {

using namespace pgmt;

inline ParticleMeasure window_sample(const MeasureModel& m, std::int64_t N, std::uint64_t seed, double scale,
                                     std::vector<double> center = {})
{
    SampleOptions so;
    so.proposal = Proposal::Window;
    so.scale = scale;
    so.center = std::move(center);
    return sample(m, N, seed, so);
}

inline ParticleMeasure two_planes(int n, double gap, std::int64_t N, double scale, std::uint64_t seed)
{
    std::vector<double> u(static_cast<std::size_t>(n), 0.0);
    u[0] = 1.0;
    const auto a = window_sample(flat_plane_model(VerticalHyperplane(u, -gap / 2)), N, seed, scale);
    const auto b = window_sample(flat_plane_model(VerticalHyperplane(u, gap / 2)), N, seed + 1, scale);
    return merge(a, b);
}

// min over a dense (angle, offset) grid of max |<u, p_H> - c| / r over the atoms in the ball (n = 2).
inline double brute_force_beta(const ParticleMeasure& mu, const Point& x, double r)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu.weights[i] > 0.0 && distance(mu.point(i), x, Metric::Koranyi) <= r) pts.push_back({mu.atom(i)[0], mu.atom(i)[1]});
    }
    double best = 1e300;
    for (int a = 0; a < 2000; ++a) {
        const double th = M_PI * a / 2000.0;
        double lo = 1e300, hi = -1e300;
        for (const auto& [p0, p1] : pts) {
            const double s = std::cos(th) * p0 + std::sin(th) * p1;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        for (int k = 0; k <= 2000; ++k) {
            const double c = x.h[0] * std::cos(th) + x.h[1] * std::sin(th) - r + 2.0 * r * k / 2000.0;
            best = std::min(best, std::max(hi - c, c - lo) / r);
        }
    }
    return best;
}

} // namespace fixtures
