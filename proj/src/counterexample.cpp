#include "pgmt/counterexample.hpp"

#include "pgmt/moments.hpp"
#include "pgmt/rectifiability.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pgmt {

double HolderProfile::operator()(double t) const
{
    double s = 0.0, freq = 1.0, amp = 1.0;
    const double a = static_cast<double>(base);
    for (int j = 0; j <= levels; ++j) {
        s += amp * std::cos(freq * t + phases[static_cast<std::size_t>(j)]);
        freq *= a;
        amp /= std::sqrt(a);
    }
    return kappa * s;
}

HolderProfile HolderProfile::scaled(double factor) const
{
    HolderProfile out = *this;
    out.kappa *= factor;
    out.certified_constant *= std::abs(factor);
    return out;
}

MeasureModel HolderProfile::model() const
{
    const HolderProfile copy = *this;
    return holder_graph_model([copy](double t) { return copy(t); }, certified_constant,
                              "weierstrass(a=" + std::to_string(base) + ",J=" + std::to_string(levels) + ")");
}

namespace {

// {1..128} then 64 lags per octave
std::vector<std::int64_t> lag_set(std::int64_t max_lag)
{
    std::vector<std::int64_t> lags;
    for (std::int64_t m = 1; m <= std::min<std::int64_t>(128, max_lag); ++m) lags.push_back(m);
    for (std::int64_t k = 1;; ++k) {
        bool any = false;
        for (std::int64_t c = 64; c < 128; ++c) {
            const std::int64_t m = c << k;
            if (m <= 128) continue;
            if (m > max_lag) break;
            lags.push_back(m);
            any = true;
        }
        if (!any && (std::int64_t{64} << k) > max_lag) break;
    }
    return lags;
}

} // namespace

double holder_constant_estimate(const std::function<double(double)>& f, double resolution, double lo, double hi,
                                int jobs)
{
    if (!(resolution > 0.0)) throw std::invalid_argument("holder_constant_estimate: resolution must be positive");
    if (!(hi > lo)) throw std::invalid_argument("holder_constant_estimate: empty window");
    const auto N = static_cast<std::int64_t>(std::floor((hi - lo) / resolution)) + 1;
    std::vector<double> vals(static_cast<std::size_t>(N));
    for (std::int64_t i = 0; i < N; ++i) vals[static_cast<std::size_t>(i)] = f(lo + static_cast<double>(i) * resolution);
    const auto lags = lag_set(N - 1);
    std::vector<double> best(lags.size(), 0.0);
    parallel_for(lags.size(), jobs, [&](std::size_t k) {
        const std::int64_t m = lags[k];
        double mx = 0.0;
        for (std::int64_t i = 0; i + m < N; ++i)
            mx = std::max(mx, std::abs(vals[static_cast<std::size_t>(i + m)] - vals[static_cast<std::size_t>(i)]));
        best[k] = mx / std::sqrt(static_cast<double>(m) * resolution);
    });
    return best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());
}

HolderProfile weierstrass_profile(int a, int J, std::uint64_t seed, const CertificationOptions& opts)
{
    if (a < 4) throw std::invalid_argument("weierstrass_profile: base must be >= 4");
    if (J < 0) throw std::invalid_argument("weierstrass_profile: levels must be >= 0");
    if (!(opts.target > 0.0 && opts.target <= 1.0)) throw std::invalid_argument("weierstrass_profile: target in (0, 1]");
    HolderProfile p;
    p.base = a;
    p.levels = J;
    p.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    for (int j = 0; j <= J; ++j) p.phases.push_back(u(rng));
    p.resolution = opts.resolution > 0.0 ? opts.resolution : std::min(1e-3, std::pow(a, -J) / 8.0);
    // f is 2 pi-periodic: pairs with s in [0, 2 pi] and lag <= 2 pi cover every quotient
    const double raw = holder_constant_estimate([&p](double t) { return p(t); }, p.resolution, 0.0, 4.0 * M_PI, opts.jobs);
    if (!(raw > 0.0)) throw std::runtime_error("weierstrass_profile: certification failed");
    p.kappa = opts.target / raw;
    p.certified_constant = holder_constant_estimate([&p](double t) { return p(t); }, p.resolution, 0.0, 4.0 * M_PI,
                                                    opts.jobs);
    return p;
}

BoxBallReport box_ball_mass(const HolderProfile& profile, const Point& x, double r, std::int64_t samples,
                            std::uint64_t seed)
{
    if (x.dim() != 1) throw std::invalid_argument("box_ball_mass: point must lie in P^1");
    if (!(r > 0.0)) throw std::invalid_argument("box_ball_mass: radius must be positive");
    if (!(profile.certified_constant <= 1.0)) throw std::invalid_argument("box_ball_mass: profile not certified");
    const double fx = profile(x.t);
    if (std::abs(x.h[0] - fx) > 1e-9 * (1.0 + std::abs(fx))) throw std::invalid_argument("box_ball_mass: point off the graph");
    SampleOptions so;
    so.proposal = Proposal::Window;
    so.scale = 2.0 * r;
    so.center = {x.t};
    const ParticleMeasure mu = sample(profile.model(), samples, seed, so);
    BoxBallReport out;
    out.exact = 2.0 * r * r;
    out.estimate = ball_mass(mu, x, r, Metric::BoxInf);
    out.koranyi = ball_mass(mu, x, r, Metric::Koranyi);
    out.koranyi_inflated = ball_mass(mu, x, std::pow(2.0, 0.25) * r, Metric::Koranyi);
    return out;
}

std::vector<TraceEntry> nonflatness_trace(const HolderProfile& profile, const Point& x,
                                          const std::vector<double>& scales, const TraceOptions& opts)
{
    if (x.dim() != 1) throw std::invalid_argument("nonflatness_trace: point must lie in P^1");
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (!(scales[k] > 0.0)) throw std::invalid_argument("nonflatness_trace: scales must be positive");
        if (k > 0 && !(scales[k] < scales[k - 1])) throw std::invalid_argument("nonflatness_trace: scales must decrease");
    }
    const MeasureModel model = profile.model();
    std::vector<TraceEntry> out(scales.size());
    parallel_for(scales.size(), opts.jobs, [&](std::size_t k) {
        const double r = scales[k];
        SampleOptions so;
        so.proposal = Proposal::Window;
        so.scale = 3.0 * r;
        so.center = {x.t};
        const ParticleMeasure mu = sample(model, opts.samples, opts.seed + 0x9e3779b97f4a7c15ULL * k, so);
        const ParticleMeasure blown = blowup(mu, x, r, 2.0);
        const FlatnessEstimate F = flatness_functional(blown);
        TraceEntry& e = out[k];
        e.scale = r;
        e.F = F.value;
        e.F_se = F.std_error;
        e.beta = beta_numbers(blown, Point::origin(1), 1.0).beta;
        e.flat_distance = flat_distance(blown, Point::origin(1), 1.0, 2, opts.flat).value;
    });
    return out;
}

std::string to_json(const HolderProfile& profile, const std::vector<TraceEntry>& trace)
{
    nlohmann::json j;
    j["base"] = profile.base;
    j["levels"] = profile.levels;
    j["seed"] = profile.seed;
    j["kappa"] = profile.kappa;
    j["certified_constant"] = profile.certified_constant;
    j["resolution"] = profile.resolution;
    j["trace"] = nlohmann::json::array();
    for (const auto& e : trace)
        j["trace"].push_back(
            {{"scale", e.scale}, {"F", e.F}, {"F_se", e.F_se}, {"beta", e.beta}, {"flat_distance", e.flat_distance}});
    return j.dump();
}

} // namespace pgmt
