#include "pgmt/measures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pgmt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double unit_ball_volume(int k)
{
    if (k == 0) return 1.0;
    return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

// Sampling chart of a model: parameters -> (point, surface density).
struct Chart {
    int n = 0;
    int dim = 0;                   // number of continuous parameters
    std::vector<bool> is_time;     // parameter scales like t (l^2) instead of h (l)
    bool has_sign = false;         // two sheets selected by a sign
    std::function<double(const double* p, int sign, double* out)> eval; // returns density, writes n+1 coords
};

struct ConeFrame {
    Eigen::MatrixXd R;   // eigenvectors, columns
    Eigen::VectorXd lam; // eigenvalues, singled-out index negative
    int k = 0;           // singled-out index
    double kappa = 1.0;
};

ConeFrame cone_frame(const Eigen::MatrixXd& Qin)
{
    const int n = static_cast<int>(Qin.rows());
    const double scale = Qin.cwiseAbs().maxCoeff();
    if (!(scale > 0)) throw std::invalid_argument("ConeCylinder needs Q != 0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qin);
    Eigen::VectorXd lam = es.eigenvalues();
    const double tol = 1e-12 * scale;
    int npos = 0, nneg = 0;
    for (int i = 0; i < n; ++i) {
        if (lam(i) > tol) ++npos;
        if (lam(i) < -tol) ++nneg;
    }
    if (nneg != 1 && npos == 1) {
        lam = -lam;
        std::swap(npos, nneg);
    }
    if (nneg != 1 || npos < 1) {
        throw std::invalid_argument("ConeCylinder sampling supports Q with exactly one eigenvalue of one sign");
    }
    ConeFrame cf;
    cf.R = es.eigenvectors();
    cf.lam = lam;
    for (int i = 0; i < n; ++i) {
        if (lam(i) < -tol) cf.k = i;
        if (std::abs(lam(i)) <= tol) cf.lam(i) = 0.0;
    }
    cf.kappa = -lam(cf.k);
    return cf;
}

Chart make_chart(const MeasureModel& model)
{
    Chart ch;
    ch.n = model.n();
    const int n = ch.n;
    std::visit(overloaded{
                   [&](const FlatPlane& fp) {
                       ch.dim = n;
                       ch.is_time.assign(n, false);
                       ch.is_time[n - 1] = true;
                       const auto basis = orthonormal_complement(fp.plane.normal);
                       const auto u = fp.plane.normal;
                       const double c = fp.plane.offset;
                       ch.eval = [basis, u, c, n](const double* p, int, double* out) {
                           for (int i = 0; i < n; ++i) out[i] = c * u[i];
                           for (int j = 0; j < n - 1; ++j) {
                               for (int i = 0; i < n; ++i) out[i] += p[j] * basis[j][i];
                           }
                           out[n] = p[n - 1];
                           return 1.0;
                       };
                   },
                   [&](const VerticalLine& vl) {
                       ch.dim = 1;
                       ch.is_time = {true};
                       const auto base = vl.base.h;
                       ch.eval = [base, n](const double* p, int, double* out) {
                           for (int i = 0; i < n; ++i) out[i] = base[i];
                           out[n] = p[0];
                           return 1.0;
                       };
                   },
                   [&](const QuadricGraph& qg) {
                       ch.dim = n;
                       ch.is_time.assign(n, false);
                       const Eigen::MatrixXd D = qg.D;
                       const Eigen::VectorXd b = qg.b;
                       ch.eval = [D, b, n](const double* p, int, double* out) {
                           const Eigen::Map<const Eigen::VectorXd> y(p, n);
                           const Eigen::VectorXd Dy = D * y;
                           for (int i = 0; i < n; ++i) out[i] = p[i];
                           out[n] = y.dot(Dy) + b.dot(y);
                           return (2.0 * Dy + b).norm();
                       };
                   },
                   [&](const ConeCylinder& cc) {
                       if (cc.b.size() != 0 && cc.b.norm() > 0.0) {
                           throw std::invalid_argument("ConeCylinder sampling supports b = 0 only");
                       }
                       const ConeFrame cf = cone_frame(cc.Q);
                       ch.dim = n;
                       ch.is_time.assign(n, false);
                       ch.is_time[n - 1] = true;
                       ch.has_sign = true;
                       ch.eval = [cf, n](const double* p, int sign, double* out) {
                           // p[0..n-2]: eigen-coordinates other than k; p[n-1]: t.
                           Eigen::VectorXd eta(n);
                           double g2 = 0.0;
                           int j = 0;
                           for (int i = 0; i < n; ++i) {
                               if (i == cf.k) continue;
                               eta(i) = p[j++];
                               g2 += cf.lam(i) * eta(i) * eta(i);
                           }
                           const double g = std::sqrt(std::max(0.0, g2 / cf.kappa));
                           eta(cf.k) = sign * g;
                           double grad2 = 0.0;
                           if (g > 0.0) {
                               for (int i = 0; i < n; ++i) {
                                   if (i == cf.k) continue;
                                   const double gi = cf.lam(i) * eta(i) / (cf.kappa * g);
                                   grad2 += gi * gi;
                               }
                           }
                           const Eigen::VectorXd y = cf.R * eta;
                           for (int i = 0; i < n; ++i) out[i] = y(i);
                           out[n] = p[n - 1];
                           return std::sqrt(1.0 + grad2);
                       };
                   },
                   [&](const KPConeProduct&) {
                       throw std::logic_error("KP cone charts are built through ConeCylinder");
                   },
                   [&](const HolderGraph& hg) {
                       ch.dim = 1;
                       ch.is_time = {true};
                       const auto f = hg.f;
                       ch.eval = [f](const double* p, int, double* out) {
                           out[0] = f(p[0]);
                           out[1] = p[0];
                           return 1.0;
                       };
                   },
               },
               model.shape);
    return ch;
}

Eigen::MatrixXd kp_matrix(int n)
{
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    Q(0, 0) = 1.0;
    Q(1, 1) = 1.0;
    Q(2, 2) = 1.0;
    Q(3, 3) = -1.0;
    return Q;
}

MeasureModel chart_model(const MeasureModel& model)
{
    if (const auto* kp = std::get_if<KPConeProduct>(&model.shape)) {
        MeasureModel m;
        m.shape = ConeCylinder{kp_matrix(kp->n), Eigen::VectorXd::Zero(kp->n)};
        m.normalization = model.normalization;
        return m;
    }
    return model;
}

ParticleMeasure sample_impl(const MeasureModel& model, std::int64_t N, std::uint64_t seed, const SampleOptions& opts)
{
    if (N < 1) throw std::invalid_argument("sample needs N >= 1");
    if (!(opts.scale > 0.0)) throw std::invalid_argument("proposal scale must be positive");
    const Chart ch = make_chart(chart_model(model));
    const int n = ch.n;
    const int d = ch.dim;
    std::vector<double> center = opts.center;
    if (center.empty()) center.assign(d, 0.0);
    if (static_cast<int>(center.size()) != d) {
        throw std::invalid_argument("proposal centre has " + std::to_string(center.size()) + " parameters, model needs " +
                                    std::to_string(d));
    }
    std::vector<double> sigma(d);
    for (int i = 0; i < d; ++i) sigma[i] = ch.is_time[i] ? opts.scale * opts.scale : opts.scale;

    const int group = opts.antithetic ? 2 : 1;
    const std::int64_t draws = (N + group - 1) / group;
    const std::size_t total = static_cast<std::size_t>(draws * group);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    ParticleMeasure mu;
    mu.n = n;
    mu.group = group;
    mu.seed = seed;
    mu.model = model;
    mu.h_dim = model.homogeneous_dim();
    mu.coords.resize(total * static_cast<std::size_t>(n + 1));
    mu.weights.resize(total);

    std::vector<double> xi(d), p(d);
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < draws; ++k) {
        double pdf = 1.0;
        for (int i = 0; i < d; ++i) {
            if (opts.proposal == Proposal::Gaussian) {
                xi[i] = normal(rng);
                pdf *= std::exp(-0.5 * xi[i] * xi[i]) / (std::sqrt(2.0 * M_PI) * sigma[i]);
            } else {
                xi[i] = unif(rng);
                pdf *= 1.0 / (2.0 * sigma[i]);
            }
        }
        int sign = 1;
        if (ch.has_sign) {
            sign = coin(rng) ? 1 : -1;
            pdf *= 0.5;
        }
        for (int a = 0; a < group; ++a) {
            const double s = a == 0 ? 1.0 : -1.0;
            for (int i = 0; i < d; ++i) p[i] = center[i] + s * sigma[i] * xi[i];
            double* out = mu.coords.data() + idx * static_cast<std::size_t>(n + 1);
            const double dens = ch.eval(p.data(), a == 0 ? sign : -sign, out);
            mu.weights[idx] = model.normalization * dens / (static_cast<double>(draws) * pdf * group);
            ++idx;
        }
    }
    return mu;
}

double radial_profile_integral(int n, double a, double r)
{
    // lambda-free mass of the Koranyi ball of radius r centred at horizontal distance a
    // from V_1 x R: 2 area(S^{n-2}) int_0^{sqrt(r^2-a^2)} rho^{n-2} sqrt(r^4-(rho^2+a^2)^2) drho.
    if (a >= r) return 0.0;
    const double r4 = r * r * r * r;
    if (n == 1) return 2.0 * std::sqrt(r4 - a * a * a * a);
    const double top = std::sqrt(r * r - a * a);
    auto f = [&](double rho) {
        const double q = rho * rho + a * a;
        return std::pow(rho, n - 2) * std::sqrt(std::max(0.0, r4 - q * q));
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double I = ts.integrate(f, 0.0, top);
    return 2.0 * sphere_area(n - 2) * I;
}

} // namespace

int MeasureModel::n() const
{
    return std::visit(overloaded{
                          [](const FlatPlane& fp) { return fp.plane.dim(); },
                          [](const VerticalLine& vl) { return vl.base.dim(); },
                          [](const QuadricGraph& qg) { return static_cast<int>(qg.D.rows()); },
                          [](const ConeCylinder& cc) { return static_cast<int>(cc.Q.rows()); },
                          [](const KPConeProduct& kp) { return kp.n; },
                          [](const HolderGraph&) { return 1; },
                      },
                      shape);
}

double MeasureModel::homogeneous_dim() const
{
    if (std::holds_alternative<VerticalLine>(shape)) return 2.0;
    return n() + 1.0;
}

std::string MeasureModel::kind() const
{
    return std::visit(overloaded{
                          [](const FlatPlane&) { return std::string("flat_plane"); },
                          [](const VerticalLine&) { return std::string("vertical_line"); },
                          [](const QuadricGraph&) { return std::string("quadric_graph"); },
                          [](const ConeCylinder&) { return std::string("cone_cylinder"); },
                          [](const KPConeProduct&) { return std::string("kp_cone"); },
                          [](const HolderGraph&) { return std::string("holder_graph"); },
                      },
                      shape);
}

MeasureModel flat_plane_model(const VerticalHyperplane& V)
{
    return MeasureModel{FlatPlane{V}, flat_normalization(V.dim())};
}

MeasureModel vertical_line_model(const Point& base)
{
    if (base.dim() < 1) throw std::invalid_argument("vertical line needs n >= 1");
    return MeasureModel{VerticalLine{base}, 0.5};
}

MeasureModel quadric_graph_model(const Eigen::MatrixXd& D, const Eigen::VectorXd& b)
{
    if (D.rows() != D.cols() || D.rows() < 1) throw std::invalid_argument("QuadricGraph needs a square D");
    if (b.size() != D.rows()) throw std::invalid_argument("QuadricGraph b has wrong length");
    if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + D.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("QuadricGraph needs a symmetric D");
    }
    if (D.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("QuadricGraph needs D != 0");
    const int n = static_cast<int>(D.rows());
    return MeasureModel{QuadricGraph{D, b}, flat_normalization(n)};
}

MeasureModel cone_cylinder_model(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, double normalization)
{
    if (Q.rows() != Q.cols() || Q.rows() < 2) throw std::invalid_argument("ConeCylinder needs a square Q, n >= 2");
    if (b.size() != Q.rows()) throw std::invalid_argument("ConeCylinder b has wrong length");
    if (!(normalization > 0.0)) throw std::invalid_argument("normalization must be positive");
    return MeasureModel{ConeCylinder{Q, b}, normalization};
}

MeasureModel kp_cone_model(int n)
{
    if (n < 4) throw std::invalid_argument("KPConeProduct needs n >= 4");
    return MeasureModel{KPConeProduct{n}, kp_normalization(n).value};
}

MeasureModel holder_graph_model(std::function<double(double)> f, double certified_constant, std::string label)
{
    if (!f) throw std::invalid_argument("HolderGraph needs a profile");
    if (!(certified_constant <= 1.0)) {
        throw std::invalid_argument("HolderGraph needs a certified 1/2-Hoelder constant <= 1, got " +
                                    std::to_string(certified_constant));
    }
    return MeasureModel{HolderGraph{std::move(f), certified_constant, std::move(label)}, 1.0};
}

double flat_normalization(int n)
{
    if (n < 1) throw std::invalid_argument("flat_normalization needs n >= 1");
    if (n == 1) return 0.5;
    boost::math::quadrature::tanh_sinh<double> ts;
    const double I = ts.integrate([n](double rho) { return std::pow(rho, n - 2) * std::sqrt(1.0 - std::pow(rho, 4)); },
                                  0.0, 1.0);
    return 1.0 / (2.0 * sphere_area(n - 2) * I);
}

KPNormalization kp_normalization(int n)
{
    if (n < 4) throw std::invalid_argument("KPConeProduct needs n >= 4");
    static std::mutex mtx;
    static std::map<int, KPNormalization> cache;
    std::lock_guard<std::mutex> lock(mtx);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    // Unnormalised H^{n-1} x dt measure restricted to the unit parameter window; the
    // unit ball at the vertex lies inside it.
    MeasureModel raw{ConeCylinder{kp_matrix(n), Eigen::VectorXd::Zero(n)}, 1.0};
    SampleOptions so;
    so.proposal = Proposal::Window;
    so.scale = 1.0;
    const std::int64_t N = 2000000;
    const ParticleMeasure mu = sample_impl(raw, N, 0x6b70636f6e65ULL + static_cast<std::uint64_t>(n), so);
    const MassEstimate m = ball_mass(mu, Point::origin(n), 1.0, Metric::Koranyi);
    KPNormalization out;
    out.value = 1.0 / m.value;
    out.std_error = m.std_error / (m.value * m.value);
    out.n_samples = N;
    cache[n] = out;
    return out;
}

std::optional<double> model_ball_mass(const MeasureModel& model, const Point& x, double r, Metric m)
{
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    if (x.dim() != model.n()) throw std::invalid_argument("dimension mismatch in model_ball_mass");
    const int n = model.n();
    if (const auto* vl = std::get_if<VerticalLine>(&model.shape)) {
        const double a = std::sqrt(norm2(sub(x, vl->base).h));
        if (a > r) return 0.0;
        if (m == Metric::BoxInf) return model.normalization * 2.0 * r * r;
        return model.normalization * 2.0 * std::sqrt(std::pow(r, 4) - std::pow(a, 4));
    }
    if (const auto* fp = std::get_if<FlatPlane>(&model.shape)) {
        const double a = plane_distance(x, fp->plane, m);
        if (a > r) return 0.0;
        if (m == Metric::BoxInf) {
            return model.normalization * 2.0 * r * r * unit_ball_volume(n - 1) * std::pow(r * r - a * a, 0.5 * (n - 1));
        }
        if (a == 0.0) return std::pow(r, n + 1) * model.normalization / flat_normalization(n);
        return model.normalization * radial_profile_integral(n, a, r);
    }
    if (const auto* hg = std::get_if<HolderGraph>(&model.shape)) {
        if (m != Metric::BoxInf) return std::nullopt;
        if (std::abs(x.h[0] - hg->f(x.t)) > 1e-9 || hg->certified_constant > 1.0) return std::nullopt;
        return 2.0 * r * r;
    }
    return std::nullopt;
}

ParticleMeasure::ParticleMeasure(int n_, std::vector<double> coords_, std::vector<double> weights_, int group_)
    : n(n_), coords(std::move(coords_)), weights(std::move(weights_)), group(group_)
{
    if (n < 1) throw std::invalid_argument("ParticleMeasure needs n >= 1");
    if (coords.size() != weights.size() * static_cast<std::size_t>(n + 1)) {
        throw std::invalid_argument("ParticleMeasure coordinate array does not match weight count");
    }
    if (group < 1 || weights.size() % static_cast<std::size_t>(group) != 0) {
        throw std::invalid_argument("ParticleMeasure group size does not divide the atom count");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("ParticleMeasure weights must be finite and >= 0");
    }
    for (double c : coords) {
        if (!std::isfinite(c)) throw std::invalid_argument("ParticleMeasure coordinates must be finite");
    }
    h_dim = n + 1.0;
}

Point ParticleMeasure::point(std::size_t i) const
{
    const double* a = atom(i);
    return Point(std::vector<double>(a, a + n), a[n]);
}

double ParticleMeasure::total_mass() const
{
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

MassEstimate weighted_estimate(const ParticleMeasure& mu, const std::function<double(const double*)>& g)
{
    return weighted_estimates(mu, 1, [&](const double* a, double* out) { out[0] = g(a); }).front();
}

std::vector<MassEstimate> weighted_estimates(const ParticleMeasure& mu, int dim,
                                             const std::function<void(const double*, double*)>& g)
{
    const std::size_t N = mu.size();
    if (N == 0) throw std::invalid_argument("empty measure");
    if (dim < 1) throw std::invalid_argument("weighted_estimates needs dim >= 1");
    const std::size_t d = static_cast<std::size_t>(dim);
    const std::size_t gs = static_cast<std::size_t>(mu.group);
    const std::size_t G = N / gs;
    std::vector<double> Y(G * d, 0.0), total(d, 0.0), buf(d);
    for (std::size_t i = 0; i < N; ++i) {
        const double w = mu.weights[i];
        if (w == 0.0) continue;
        g(mu.atom(i), buf.data());
        for (std::size_t c = 0; c < d; ++c) {
            const double v = w * buf[c];
            Y[(i / gs) * d + c] += v;
            total[c] += v;
        }
    }
    // Independent strata (blocks of draws); the variance of the sum adds over strata.
    std::vector<std::size_t> starts = mu.strata.empty() ? std::vector<std::size_t>{0} : mu.strata;
    std::vector<MassEstimate> out(d);
    for (std::size_t c = 0; c < d; ++c) {
        out[c].value = total[c];
        out[c].n_samples = static_cast<std::int64_t>(G);
    }
    std::vector<double> var(d, 0.0), sum(d);
    for (std::size_t b = 0; b < starts.size(); ++b) {
        const std::size_t g0 = starts[b] / gs;
        const std::size_t g1 = b + 1 < starts.size() ? starts[b + 1] / gs : G;
        const std::size_t Gb = g1 - g0;
        if (Gb < 2) continue;
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = g0; j < g1; ++j) {
            for (std::size_t c = 0; c < d; ++c) sum[c] += Y[j * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) {
            const double mean = sum[c] / static_cast<double>(Gb);
            double ss = 0.0;
            for (std::size_t j = g0; j < g1; ++j) {
                const double e = Y[j * d + c] - mean;
                ss += e * e;
            }
            // Var of the stratum sum from Gb i.i.d. draws of Gb * Y_j.
            var[c] += ss / static_cast<double>(Gb - 1) * static_cast<double>(Gb);
        }
    }
    for (std::size_t c = 0; c < d; ++c) out[c].std_error = std::sqrt(var[c]);
    return out;
}

int parameter_dim(const MeasureModel& model)
{
    return make_chart(chart_model(model)).dim;
}

std::vector<double> chart_parameters(const MeasureModel& model, const Point& x)
{
    if (x.dim() != model.n()) throw std::invalid_argument("chart_parameters: dimension mismatch");
    const MeasureModel cm = chart_model(model);
    const int n = x.dim();
    if (const auto* fp = std::get_if<FlatPlane>(&cm.shape)) {
        std::vector<double> p;
        std::vector<double> rel(x.h);
        for (int i = 0; i < n; ++i) rel[i] -= fp->plane.offset * fp->plane.normal[i];
        for (const auto& e : orthonormal_complement(fp->plane.normal)) p.push_back(dot(e, rel));
        p.push_back(x.t);
        return p;
    }
    if (std::holds_alternative<VerticalLine>(cm.shape) || std::holds_alternative<HolderGraph>(cm.shape)) return {x.t};
    if (std::holds_alternative<QuadricGraph>(cm.shape)) return x.h;
    if (const auto* cc = std::get_if<ConeCylinder>(&cm.shape)) {
        const ConeFrame cf = cone_frame(cc->Q);
        const Eigen::VectorXd eta = cf.R.transpose() * Eigen::Map<const Eigen::VectorXd>(x.h.data(), n);
        std::vector<double> p;
        for (int i = 0; i < n; ++i) {
            if (i != cf.k) p.push_back(eta(i));
        }
        p.push_back(x.t);
        return p;
    }
    throw std::invalid_argument("chart_parameters: unsupported model");
}

ParticleMeasure sample(const MeasureModel& model, std::int64_t N, std::uint64_t seed, const SampleOptions& opts)
{
    return sample_impl(model, N, seed, opts);
}

MassEstimate ball_mass(const ParticleMeasure& mu, const Point& x, double r, Metric m)
{
    if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
    if (mu.size() == 0) throw std::invalid_argument("ball_mass on an empty measure");
    if (x.dim() != mu.n) throw std::invalid_argument("dimension mismatch in ball_mass");
    std::vector<double> c(x.h);
    c.push_back(x.t);
    const int n = mu.n;
    return weighted_estimate(mu, [&](const double* a) { return distance_raw(c.data(), a, n, m) <= r ? 1.0 : 0.0; });
}

ParticleMeasure sample_shells(const MeasureModel& model, const Point& z, double r_min, double r_max,
                              std::int64_t per_shell, std::uint64_t seed, Metric m)
{
    if (!(r_min > 0.0) || !(r_max >= r_min)) throw std::invalid_argument("sample_shells needs 0 < r_min <= r_max");
    if (z.dim() != model.n()) throw std::invalid_argument("sample_shells: dimension mismatch");
    SampleOptions so;
    so.proposal = Proposal::Window;
    so.center = chart_parameters(model, z);
    std::vector<double> c(z.h);
    c.push_back(z.t);
    const int n = model.n();
    ParticleMeasure out;
    double inner = 0.0, outer = r_min;
    for (int k = 0;; ++k) {
        so.scale = outer;
        ParticleMeasure shell = sample(model, per_shell, seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k), so);
        for (std::size_t i = 0; i < shell.size(); ++i) {
            const double d = distance_raw(c.data(), shell.atom(i), n, m);
            if (!(d > inner || k == 0) || d > outer) shell.weights[i] = 0.0;
        }
        out = k == 0 ? shell : merge(out, shell);
        if (outer >= r_max) break;
        inner = outer;
        outer = std::min(2.0 * outer, r_max);
    }
    out.model = model;
    out.h_dim = model.homogeneous_dim();
    out.seed = seed;
    return out;
}

ParticleMeasure blowup(const ParticleMeasure& mu, const Point& x, double r, double h)
{
    if (!(r > 0.0)) throw std::invalid_argument("blowup radius must be positive");
    if (x.dim() != mu.n) throw std::invalid_argument("dimension mismatch in blowup");
    ParticleMeasure out = mu;
    out.model.reset();
    const int n = mu.n;
    const double inv = 1.0 / r;
    const double wscale = std::pow(r, -h);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double* a = out.coords.data() + i * static_cast<std::size_t>(n + 1);
        for (int j = 0; j < n; ++j) a[j] = (a[j] - x.h[j]) * inv;
        a[n] = (a[n] - x.t) * inv * inv;
        out.weights[i] *= wscale;
    }
    if (mu.total_mass_hint) out.total_mass_hint = *mu.total_mass_hint * wscale;
    return out;
}

std::vector<MassEstimate> density_curve(const ParticleMeasure& mu, const Point& x, const std::vector<double>& radii,
                                        double h, Metric m)
{
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw std::invalid_argument("density_curve radii must be positive");
        if (i > 0 && radii[i] < radii[i - 1]) throw std::invalid_argument("density_curve radii must be sorted");
    }
    std::vector<MassEstimate> out;
    out.reserve(radii.size());
    for (double r : radii) {
        MassEstimate e = ball_mass(mu, x, r, m);
        const double s = std::pow(r, -h);
        e.value *= s;
        e.std_error *= s;
        out.push_back(e);
    }
    return out;
}

ParticleMeasure merge(const ParticleMeasure& a, const ParticleMeasure& b)
{
    if (a.n != b.n) throw std::invalid_argument("merge: dimension mismatch");
    ParticleMeasure out;
    out.n = a.n;
    out.coords = a.coords;
    out.coords.insert(out.coords.end(), b.coords.begin(), b.coords.end());
    out.weights = a.weights;
    out.weights.insert(out.weights.end(), b.weights.begin(), b.weights.end());
    // Mixed group sizes fall back to treating every atom as its own draw.
    out.group = a.group == b.group ? a.group : 1;
    out.strata = a.strata.empty() ? std::vector<std::size_t>{0} : a.strata;
    if (b.strata.empty()) {
        out.strata.push_back(a.size());
    } else {
        for (std::size_t s0 : b.strata) out.strata.push_back(a.size() + s0);
    }
    out.h_dim = a.h_dim;
    out.seed = a.seed;
    return out;
}

void write_csv(const ParticleMeasure& mu, std::ostream& out)
{
    out << "n," << mu.n << "\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double* a = mu.atom(i);
        for (int j = 0; j <= mu.n; ++j) out << a[j] << ',';
        out << mu.weights[i] << "\n";
    }
}

ParticleMeasure read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: missing header");
    if (line.rfind("n,", 0) != 0) throw std::runtime_error("csv: header must be 'n,<int>'");
    const int n = std::stoi(line.substr(2));
    if (n < 1) throw std::runtime_error("csv: n must be >= 1");
    std::vector<double> coords, weights;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("csv: bad number on line " + std::to_string(lineno));
            }
        }
        if (static_cast<int>(row.size()) != n + 2) {
            throw std::runtime_error("csv: line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                     " fields, expected " + std::to_string(n + 2));
        }
        coords.insert(coords.end(), row.begin(), row.end() - 1);
        weights.push_back(row.back());
    }
    return ParticleMeasure(n, std::move(coords), std::move(weights));
}

void write_csv_file(const ParticleMeasure& mu, const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(mu, f);
}

ParticleMeasure read_csv_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return read_csv(f);
}

} // namespace pgmt
