#pragma once

#include "pgmt/core.hpp"
#include "pgmt/measures.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pgmt {

// Lacunary profile f(t) = kappa * sum_{j=0}^{J} a^{-j/2} cos(a^j t + phi_j), 2 pi-periodic.
struct HolderProfile {
    int base = 4;
    int levels = 0;
    std::uint64_t seed = 0;
    double kappa = 1.0;
    std::vector<double> phases;
    // Grid estimate of the 1/2-Hoelder constant of this profile (kappa included).
    double certified_constant = 0.0;
    double resolution = 0.0;

    double operator()(double t) const;
    // Same profile with kappa and the certified constant multiplied by factor.
    HolderProfile scaled(double factor) const;
    // Graph {(f(t), t)} in P^1 with the pushforward of Lebesgue measure.
    MeasureModel model() const;
};

struct CertificationOptions {
    // 0 selects min(1e-3, a^{-J} / 8).
    double resolution = 0.0;
    double target = 0.95;
    int jobs = 1;
};

// Builds the profile with random phases and rescales kappa so the certified constant equals target.
HolderProfile weierstrass_profile(int a, int J, std::uint64_t seed, const CertificationOptions& opts = {});

// max |f(s) - f(t)| / |s - t|^{1/2} over s on the grid lo + i * resolution in [lo, hi] and
// t = s + m * resolution with m <= (hi - lo) / resolution taken from {1..128} and {c 2^k : 64 <= c < 128}
// (64 lags per octave). Halving the resolution evaluates a superset of pairs.
double holder_constant_estimate(const std::function<double(double)>& f, double resolution, double lo, double hi,
                                int jobs = 1);

struct BoxBallReport {
    double exact = 0.0;           // 2 r^2
    MassEstimate estimate;        // particle estimate of the box ball
    MassEstimate koranyi;         // particle estimate of the Koranyi ball B(x, r)
    MassEstimate koranyi_inflated; // B(x, 2^{1/4} r), which contains the box ball
};

// Box-ball mass at x on the graph, with particle estimates from a window sample of width 2r.
// Throws std::invalid_argument if x is off the graph or the profile is not certified.
BoxBallReport box_ball_mass(const HolderProfile& profile, const Point& x, double r, std::int64_t samples = 20000,
                            std::uint64_t seed = 1);

struct TraceEntry {
    double scale = 0.0;
    double F = 0.0;
    double F_se = 0.0;
    double beta = 0.0;
    double flat_distance = 0.0;
};

struct TraceOptions {
    std::int64_t samples = 20000;
    std::uint64_t seed = 1;
    int jobs = 1;
    FlatDistanceOptions flat;
};

// F, beta and d_{0,1} of r^{-2} T_{x,r} of the graph measure for each scale (Koranyi metric).
std::vector<TraceEntry> nonflatness_trace(const HolderProfile& profile, const Point& x,
                                          const std::vector<double>& scales, const TraceOptions& opts = {});

std::string to_json(const HolderProfile& profile, const std::vector<TraceEntry>& trace);

} // namespace pgmt
