#include "commands.hpp"

#include "pgmt/core.hpp"
#include "pgmt/counterexample.hpp"
#include "pgmt/measures.hpp"
#include "pgmt/moments.hpp"
#include "pgmt/quadric_area.hpp"
#include "pgmt/rectifiability.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace pgmt::cli {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& path)
{
    if (!j.contains(key)) throw ConfigError("missing field '" + path + key + "'");
    return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path = {})
{
    const json& v = field(j, key, path);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + path + key + "': " + e.what());
    }
}

double positive(const json& j, const std::string& key, const std::string& path = {})
{
    const double v = get<double>(j, key, path);
    if (!(v > 0.0)) throw ConfigError("field '" + path + key + "' must be positive");
    return v;
}

Eigen::MatrixXd matrix(const json& j, const std::string& key, const std::string& path)
{
    const auto rows = get<std::vector<std::vector<double>>>(j, key, path);
    if (rows.empty()) throw ConfigError("field '" + path + key + "' is empty");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError("field '" + path + key + "' is ragged");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return M;
}

Eigen::VectorXd vector(const json& j, const std::string& key, const std::string& path)
{
    const auto v = get<std::vector<double>>(j, key, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const Eigen::MatrixXd& M)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        out.push_back(row);
    }
    return out;
}

json to_json(const Point& p) { return {{"h", p.h}, {"t", p.t}}; }

json to_json(const MassEstimate& e) { return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}}; }

Point point(const json& j, const std::string& path, int n)
{
    const auto h = get<std::vector<double>>(j, "h", path);
    if (static_cast<int>(h.size()) != n)
        throw ConfigError("field '" + path + "h' has " + std::to_string(h.size()) + " entries, model needs " +
                          std::to_string(n));
    return Point(h, get<double>(j, "t", path));
}

HolderProfile holder_profile(const json& h, const std::string& path, int jobs)
{
    CertificationOptions co;
    co.jobs = jobs;
    return weierstrass_profile(get<int>(h, "base", path), get<int>(h, "levels", path),
                               get<std::uint64_t>(h, "seed", path), co);
}

MeasureModel parse_model(const json& cfg)
{
    const json& m = field(cfg, "model", "");
    const std::string p = "model.";
    const auto kind = get<std::string>(m, "kind", p);
    try {
        if (kind == "flat") {
            const int n = get<int>(m, "n", p);
            std::vector<double> normal(static_cast<std::size_t>(n), 0.0);
            normal[0] = 1.0;
            if (m.contains("normal")) normal = get<std::vector<double>>(m, "normal", p);
            const double offset = m.contains("offset") ? get<double>(m, "offset", p) : 0.0;
            return flat_plane_model(VerticalHyperplane(normal, offset));
        }
        if (kind == "vertical-line") {
            const int n = get<int>(m, "n", p);
            const Point base = m.contains("base") ? point(m.at("base"), p + "base.", n) : Point::origin(n);
            return vertical_line_model(base);
        }
        if (kind == "quadric") {
            const Eigen::MatrixXd D = matrix(m, "D", p);
            const Eigen::VectorXd b = m.contains("b") ? vector(m, "b", p) : Eigen::VectorXd::Zero(D.rows());
            return quadric_graph_model(D, b);
        }
        if (kind == "cone") {
            const Eigen::MatrixXd Q = matrix(m, "Q", p);
            const Eigen::VectorXd b = m.contains("b") ? vector(m, "b", p) : Eigen::VectorXd::Zero(Q.rows());
            return cone_cylinder_model(Q, b, m.contains("normalization") ? get<double>(m, "normalization", p) : 1.0);
        }
        if (kind == "kp") return kp_cone_model(get<int>(m, "n", p));
        if (kind == "holder") return holder_profile(field(m, "holder", p), p + "holder.", 1).model();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("field 'model': " + std::string(e.what()));
    }
    throw ConfigError("field 'model.kind': unknown model '" + kind + "'");
}

// Positive-weight atom of a fixed Gaussian sample closest to the origin.
Point default_support_point(const MeasureModel& model)
{
    const ParticleMeasure mu = sample(model, 4000, 0);
    std::size_t best = mu.size();
    double bd = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(mu.weights[i] > 0.0)) continue;
        const double d = norm(mu.point(i), Metric::Koranyi);
        if (best == mu.size() || d < bd) {
            best = i;
            bd = d;
        }
    }
    if (best == mu.size()) throw std::runtime_error("model has no support atoms near the origin");
    return mu.point(best);
}

Point support_point(const json& cfg, const MeasureModel& model)
{
    if (cfg.contains("x") && !cfg.at("x").is_null()) return point(cfg.at("x"), "x.", model.n());
    return default_support_point(model);
}

ParticleMeasure window_cloud(const MeasureModel& model, const Point& x, double scale, std::int64_t N,
                             std::uint64_t seed)
{
    SampleOptions so;
    so.proposal = Proposal::Window;
    so.scale = scale;
    so.center = chart_parameters(model, x);
    return sample(model, N, seed, so);
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// FNV-1a over the canonical dump
std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Report {
public:
    json results = json::object();
    bool partial = false;

    void check(const std::string& name, double value, double tolerance, bool pass)
    {
        checks_.push_back({{"name", name}, {"value", value}, {"tolerance", tolerance}, {"pass", pass}});
    }
    json checks() const { return checks_; }

private:
    json checks_ = json::array();
};

class Budget {
public:
    explicit Budget(double seconds)
        : limited_(seconds > 0.0),
          deadline_(std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds)))
    {
    }
    bool exhausted() const { return limited_ && std::chrono::steady_clock::now() > deadline_; }

private:
    bool limited_;
    std::chrono::steady_clock::time_point deadline_;
};

// ---------------------------------------------------------------------------

void verify_uniform(const json& cfg, Report& rep, const Budget& budget)
{
    const MeasureModel model = parse_model(cfg);
    const auto N = get<std::int64_t>(cfg, "samples");
    const auto seed = get<std::uint64_t>(cfg, "seed");
    const Metric metric = metric_from_string(get<std::string>(cfg, "metric"));
    const int centers = get<int>(cfg, "centers");
    const double r_min = positive(cfg, "r_min"), r_max = positive(cfg, "r_max");
    const double k = get<double>(cfg, "se_factor"), rel = get<double>(cfg, "rel_tol");
    if (r_max < r_min) throw ConfigError("field 'r_max' must be >= r_min");
    const double h = model.homogeneous_dim();

    // support points from a Gaussian sample, radii uniform in [r_min, r_max]
    const ParticleMeasure pool = sample(model, 4 * centers + 64, seed);
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool.weights[i] > 0.0) live.push_back(i);
    if (live.empty()) throw std::runtime_error("verify-uniform: no support atoms");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(r_min, r_max);

    json entries = json::array();
    double worst_dev = 0.0, worst_se = 0.0;
    bool pass = true;
    for (int i = 0; i < centers; ++i) {
        if (budget.exhausted()) {
            rep.partial = true;
            break;
        }
        const Point x = pool.point(live[static_cast<std::size_t>(i) % live.size()]);
        const double r = ur(rng);
        const ParticleMeasure mu = window_cloud(model, x, r, N, seed + 1000003ULL * static_cast<std::uint64_t>(i + 1));
        const MassEstimate m = ball_mass(mu, x, r, metric);
        const double dens = m.value / std::pow(r, h), se = m.std_error / std::pow(r, h);
        const double dev = std::abs(dens - 1.0);
        worst_dev = std::max(worst_dev, dev);
        if (se > 0.0) worst_se = std::max(worst_se, dev / se);
        const bool ok = dev <= k * se + rel;
        pass = pass && ok;
        json e = {{"x", to_json(x)}, {"r", r}, {"mass", to_json(m)}, {"density", dens}, {"density_se", se}, {"pass", ok}};
        if (const auto cf = model_ball_mass(model, x, r, metric)) e["closed_form"] = *cf;
        entries.push_back(e);
    }
    rep.results = {{"model", model.kind()}, {"h", h}, {"entries", entries}, {"max_abs_deviation", worst_dev},
                   {"max_deviation_in_se", worst_se}};
    rep.check("density_within_tolerance", worst_dev, rel, pass);
}

void moments(const json& cfg, Report& rep, const Budget&)
{
    const MeasureModel model = parse_model(cfg);
    SampleOptions so;
    so.scale = positive(cfg, "scale");
    const ParticleMeasure mu = sample(model, get<std::int64_t>(cfg, "samples"), get<std::uint64_t>(cfg, "seed"), so);
    const auto s_grid = get<std::vector<double>>(cfg, "s_grid");
    if (s_grid.empty()) throw ConfigError("field 's_grid' is empty");
    const MomentReport mr = moment_report(mu, s_grid);
    rep.results = json::parse(to_json(mr));
    rep.results["model"] = model.kind();

    // KP normalisation is itself a Monte Carlo constant
    double rel = 0.0;
    if (std::holds_alternative<KPConeProduct>(model.shape)) rel = kp_normalization(model.n()).std_error / kp_normalization(model.n()).value;
    const double k = get<double>(cfg, "se_factor");
    std::vector<Point> us;
    if (cfg.contains("u") && !cfg.at("u").is_null()) {
        for (std::size_t i = 0; i < cfg.at("u").size(); ++i)
            us.push_back(point(cfg.at("u").at(i), "u[" + std::to_string(i) + "].", model.n()));
    } else {
        std::vector<double> h(static_cast<std::size_t>(model.n()), 0.0);
        h.back() = 0.6;
        us.push_back(Point(h, 0.3));
    }
    json q = json::array();
    for (const Point& u : us) {
        const MassEstimate e = quartic_residual(mu, u);
        const double se = std::hypot(e.std_error, rel * std::pow(norm(u, Metric::Koranyi), 4));
        q.push_back({{"u", to_json(u)}, {"residual", to_json(e)}});
        rep.check("quartic_identity", std::abs(e.value), k * se, std::abs(e.value) <= k * se);
    }
    rep.results["quartic"] = q;
}

void beta(const json& cfg, Report& rep, const Budget&)
{
    const MeasureModel model = parse_model(cfg);
    const Point x = support_point(cfg, model);
    const double r = positive(cfg, "r");
    const ParticleMeasure mu =
        window_cloud(model, x, 2.0 * r, get<std::int64_t>(cfg, "samples"), get<std::uint64_t>(cfg, "seed"));
    BetaOptions bo;
    bo.seed = get<std::uint64_t>(cfg, "seed");
    const BetaPair b = beta_numbers(mu, x, r, bo);
    rep.results = {{"model", model.kind()},
                   {"x", to_json(x)},
                   {"r", r},
                   {"beta", b.beta},
                   {"bbeta", b.bbeta},
                   {"plane", {{"normal", b.best_plane.normal}, {"offset", b.best_plane.offset}}},
                   {"atoms_in_ball", b.atoms_in_ball}};
    if (!cfg.at("max_beta").is_null()) {
        const double tol = get<double>(cfg, "max_beta");
        rep.check("beta", b.beta, tol, b.beta <= tol);
    }
}

void bwgl(const json& cfg, Report& rep, const Budget&)
{
    const MeasureModel model = parse_model(cfg);
    const Point x = support_point(cfg, model);
    const ParticleMeasure mu = sample_shells(model, x, positive(cfg, "r_min"), positive(cfg, "r_max"),
                                             get<std::int64_t>(cfg, "samples"), get<std::uint64_t>(cfg, "seed"));
    DyadicOptions dopt;
    dopt.j0 = get<int>(cfg, "j0");
    dopt.core = get<int>(cfg, "core");
    dopt.jobs = get<int>(cfg, "jobs");
    dopt.beta.seed = get<std::uint64_t>(cfg, "seed");
    const CubeTree tree = dyadic_decompose(mu, get<int>(cfg, "depth"), dopt);
    const double eta = positive(cfg, "eta");
    const BwglResult b = carleson_bwgl(tree, eta);
    json stats = json::array();
    for (const auto& g : tree.stats)
        stats.push_back({{"generation", g.generation},
                         {"cubes", g.cubes},
                         {"retained", g.retained},
                         {"median_mass_ratio", g.median_mass_ratio},
                         {"max_diam_ratio", g.max_diam_ratio},
                         {"min_inner_ratio", g.min_inner_ratio}});
    rep.results = {{"model", model.kind()}, {"x", to_json(x)},      {"eta", eta},
                   {"value", b.value},      {"profile", b.profile}, {"generations", stats}};
    if (!cfg.at("max_bwgl").is_null()) {
        const double tol = get<double>(cfg, "max_bwgl");
        rep.check("bwgl", b.value, tol, b.value <= tol);
    }
}

void wcd(const json& cfg, Report& rep, const Budget&)
{
    const MeasureModel model = parse_model(cfg);
    const Point x = support_point(cfg, model);
    const double r = positive(cfg, "r"), eps = positive(cfg, "eps");
    const ParticleMeasure mu =
        window_cloud(model, x, 2.0 * r, get<std::int64_t>(cfg, "samples"), get<std::uint64_t>(cfg, "seed"));
    WcdOptions wo;
    wo.seed = get<std::uint64_t>(cfg, "seed");
    const WcdResult w = wcd_probe(mu, x, r, eps, wo);
    rep.results = {{"model", model.kind()},
                   {"x", to_json(x)},
                   {"r", r},
                   {"theta", w.theta},
                   {"worst_deviation", w.worst_deviation},
                   {"worst_center", to_json(w.worst_center)},
                   {"worst_radius", w.worst_radius}};
    rep.check("wcd", w.worst_deviation, eps, w.pass);
}

void quadric_expansion(const json& cfg, Report& rep, const Budget& budget)
{
    const Eigen::MatrixXd D = matrix(cfg, "D", "");
    const Eigen::VectorXd x = vector(cfg, "x", "");
    const auto radii = get<std::vector<double>>(cfg, "radii");
    std::vector<std::pair<double, double>> data;
    std::vector<double> areas;
    try {
        const QuadricFrame f(D, x);
        AreaOptions ao;
        ao.jobs = get<int>(cfg, "jobs");
        ao.seed = get<std::uint64_t>(cfg, "seed");
        for (double r : radii) {
            if (budget.exhausted()) {
                rep.partial = true;
                break;
            }
            const double a = area_direct(f, r, ao);
            data.push_back({r, a});
            areas.push_back(a);
        }
        const ExpansionConstants ec = expansion_constants(f);
        const ExpansionFit fit = fit_expansion(data, f.n());
        rep.results = {{"n", f.n()},
                       {"D", to_json(D)},
                       {"x", std::vector<double>(x.data(), x.data() + x.size())},
                       {"radii", radii},
                       {"areas", areas},
                       {"c_hat", fit.c_hat},
                       {"zeta_hat", fit.zeta_hat},
                       {"e_hat", fit.e_hat},
                       {"c_se", fit.c_se},
                       {"zeta_se", fit.zeta_se},
                       {"e_se", fit.e_se},
                       {"c_formula", ec.c_n},
                       {"e_formula", ec.e},
                       {"bracket", ec.bracket}};
        const double ct = get<double>(cfg, "c_rel_tol"), et = get<double>(cfg, "e_rel_tol");
        const double zk = get<double>(cfg, "zeta_se_factor");
        const double cdev = std::abs(fit.c_hat / ec.c_n - 1.0);
        const double edev = std::abs(fit.e_hat / ec.e - 1.0);
        rep.check("c_hat_vs_formula", cdev, ct, cdev <= ct);
        rep.check("zeta_hat_vanishes", std::abs(fit.zeta_hat), zk * fit.zeta_se, std::abs(fit.zeta_hat) <= zk * fit.zeta_se);
        rep.check("e_hat_vs_formula", edev, et, edev <= et);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("quadric-expansion: ") + e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("quadric-expansion: ") + e.what());
    }
}

void counterexample(const json& cfg, Report& rep, const Budget& budget)
{
    const int jobs = get<int>(cfg, "jobs");
    CertificationOptions co;
    co.jobs = jobs;
    HolderProfile p;
    try {
        p = weierstrass_profile(get<int>(cfg, "base"), get<int>(cfg, "levels"), get<std::uint64_t>(cfg, "seed"), co);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("counterexample: ") + e.what());
    }
    const double t = get<double>(cfg, "t");
    const Point x({p(t)}, t);
    const auto samples = get<std::int64_t>(cfg, "samples");
    json boxes = json::array();
    const auto box_radii = get<std::vector<double>>(cfg, "box_radii");
    for (std::size_t k = 0; k < box_radii.size(); ++k) {
        const double r = box_radii[k];
        const BoxBallReport b = box_ball_mass(p, x, r, samples, get<std::uint64_t>(cfg, "seed") + 7919ULL * k);
        boxes.push_back({{"r", r},
                         {"exact", b.exact},
                         {"estimate", to_json(b.estimate)},
                         {"koranyi", to_json(b.koranyi)},
                         {"koranyi_inflated", to_json(b.koranyi_inflated)}});
        const double dev = std::abs(b.estimate.value - b.exact);
        rep.check("box_ball_mass", dev, 3.0 * b.estimate.std_error, dev <= 3.0 * b.estimate.std_error);
    }
    auto scales = get<std::vector<double>>(cfg, "scales");
    TraceOptions to;
    to.samples = get<std::int64_t>(cfg, "trace_samples");
    to.seed = get<std::uint64_t>(cfg, "seed");
    to.jobs = jobs;
    std::vector<TraceEntry> trace;
    // one scale at a time so the budget can stop between scales
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (budget.exhausted()) {
            rep.partial = true;
            break;
        }
        const auto e = nonflatness_trace(p, x, {scales[k]}, to);
        trace.push_back(e.front());
    }
    try {
        rep.results = json::parse(to_json(p, trace));
    } catch (const json::exception&) {
        throw std::runtime_error("counterexample: malformed trace");
    }
    rep.results["x"] = to_json(x);
    rep.results["box_balls"] = boxes;
    rep.check("certified_constant", p.certified_constant, 1.0, p.certified_constant <= 1.0);
}

void square_function(const json& cfg, Report& rep, const Budget&)
{
    const MeasureModel model = parse_model(cfg);
    const Point x = support_point(cfg, model);
    const double R = positive(cfg, "R"), q = positive(cfg, "q");
    const ParticleMeasure mu =
        sample_shells(model, x, R / 64.0, R, get<std::int64_t>(cfg, "samples"), get<std::uint64_t>(cfg, "seed"));
    SquareFunctionOptions so;
    so.r_min = get<double>(cfg, "r_min");
    const SquareFunctionResult s = density_square_function(mu, x, R, q, so);
    rep.results = {{"model", model.kind()}, {"x", to_json(x)},          {"R", R},
                   {"q", q},                {"value", s.value},         {"noise_floor", s.noise_floor},
                   {"r_min", s.r_min},      {"radii", s.radii},         {"differences", s.differences}};
    if (!cfg.at("max_value").is_null()) {
        const double tol = get<double>(cfg, "max_value");
        rep.check("square_function", s.value, tol, s.value <= tol);
    }
}

using Handler = std::function<void(const json&, Report&, const Budget&)>;

const std::map<std::string, Handler>& handlers()
{
    static const std::map<std::string, Handler> h = {
        {"verify-uniform", verify_uniform}, {"moments", moments},
        {"beta", beta},                     {"bwgl", bwgl},
        {"wcd", wcd},                       {"quadric-expansion", quadric_expansion},
        {"counterexample", counterexample}, {"square-function", square_function},
    };
    return h;
}

json defaults(const std::string& command)
{
    json d = {{"seed", 1}, {"samples", 100000}, {"jobs", 1}, {"time_budget", 0.0}, {"model", {{"kind", "flat"}, {"n", 2}}}};
    if (command == "verify-uniform") {
        d.update({{"metric", "koranyi"}, {"centers", 20}, {"r_min", 0.1}, {"r_max", 2.0}, {"se_factor", 3.0}, {"rel_tol", 0.0}});
    } else if (command == "moments") {
        d.update({{"s_grid", {0.5, 1.0, 2.0}}, {"scale", 1.2}, {"se_factor", 3.0}, {"u", nullptr}});
    } else if (command == "beta") {
        d.update({{"x", nullptr}, {"r", 1.0}, {"max_beta", nullptr}});
    } else if (command == "bwgl") {
        d.update({{"x", nullptr}, {"depth", 2}, {"j0", 1}, {"core", 1}, {"r_min", 1.0}, {"r_max", 2.0}, {"eta", 0.1},
                  {"max_bwgl", nullptr}});
    } else if (command == "wcd") {
        d.update({{"x", nullptr}, {"r", 1.0}, {"eps", 0.05}});
    } else if (command == "quadric-expansion") {
        d.erase("model");
        d.update({{"D", {{1.0, 0.0}, {0.0, -1.0}}},
                  {"x", {std::sqrt(0.5), std::sqrt(0.5)}},
                  {"radii", {0.125, 0.0625, 0.03125, 0.015625, 0.0078125}},
                  {"c_rel_tol", 0.01},
                  {"e_rel_tol", 0.02},
                  {"zeta_se_factor", 3.0}});
    } else if (command == "counterexample") {
        d.erase("model");
        d.update({{"base", 4},
                  {"levels", 6},
                  {"t", 0.4},
                  {"scales", {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}},
                  {"box_radii", {0.25, 0.5, 1.0}},
                  {"samples", 20000},
                  {"trace_samples", 4000}});
    } else if (command == "square-function") {
        d.update({{"x", nullptr}, {"R", 1.0}, {"q", 2.0}, {"r_min", 0.0}, {"max_value", nullptr}});
    }
    return d;
}

} // namespace

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, h] : handlers()) v.push_back(k);
        return v;
    }();
    return names;
}

json normalize_config(const json& config)
{
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    const auto command = get<std::string>(config, "command");
    if (!handlers().count(command)) throw ConfigError("field 'command': unknown command '" + command + "'");
    json out = defaults(command);
    const bool kp_default = !config.contains("rel_tol") && config.contains("model") && config.at("model").is_object() &&
                            config.at("model").value("kind", "") == "kp";
    for (const auto& [k, v] : config.items()) {
        if (k != "command" && !out.contains(k)) throw ConfigError("unknown field '" + k + "' for command '" + command + "'");
        if (k == "model") {
            if (!v.is_object()) throw ConfigError("field 'model' must be an object");
            out["model"] = v;
        } else {
            out[k] = v;
        }
    }
    out["command"] = command;
    // the KP normalisation is a Monte Carlo constant known to about 0.3%
    if (command == "verify-uniform" && kp_default) out["rel_tol"] = 0.02;
    if (get<std::int64_t>(out, "samples") < 2) throw ConfigError("field 'samples' must be >= 2");
    if (get<int>(out, "jobs") < 1) throw ConfigError("field 'jobs' must be >= 1");
    if (out.contains("model")) {
        const json& m = out.at("model");
        if (m.value("kind", "") == "holder" && !m.contains("holder"))
            out["model"]["holder"] = {{"base", 4}, {"levels", 6}, {"seed", 1}};
        parse_model(out);
    }
    return out;
}

json run(const json& config)
{
    const json cfg = normalize_config(config);
    const std::string command = cfg.at("command");
    Report rep;
    const Budget budget(get<double>(cfg, "time_budget"));
    try {
        handlers().at(command)(cfg, rep, budget);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(command + ": " + e.what());
    }
    json echo = cfg;
    echo.erase("jobs");
    const json checks = rep.checks();
    bool pass = !rep.partial;
    for (const auto& c : checks) pass = pass && c.at("pass").get<bool>();
    return {{"command", command},
            {"config", cfg},
            {"config_hash", hex64(fnv1a(echo.dump()))},
            {"seed", cfg.at("seed")},
            {"results", rep.results},
            {"checks", checks},
            {"partial", rep.partial},
            {"pass", pass}};
}

std::string summary_table(const json& report)
{
    std::ostringstream os;
    os << report.at("command").get<std::string>() << "  config " << report.at("config_hash").get<std::string>() << "\n";
    for (const auto& c : report.at("checks")) {
        char line[256];
        std::snprintf(line, sizeof line, "  %-4s %-24s value %-14.6g tolerance %.6g\n", c.at("pass").get<bool>() ? "PASS" : "FAIL",
                      c.at("name").get<std::string>().c_str(), c.at("value").get<double>(), c.at("tolerance").get<double>());
        os << line;
    }
    if (report.at("partial").get<bool>()) os << "  partial report: time budget exhausted\n";
    os << (report.at("pass").get<bool>() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

} // namespace pgmt::cli
