#include "pgmt/moments.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace pgmt {

namespace {

double norm4_raw(const double* z, int n)
{
    double h2 = 0.0;
    for (int i = 0; i < n; ++i) h2 += z[i] * z[i];
    return h2 * h2 + z[n] * z[n];
}

double factorial(int k)
{
    return std::tgamma(k + 1.0);
}

double resolve_h(const ParticleMeasure& mu, std::optional<double> h)
{
    const double v = h ? *h : mu.h_dim;
    if (!(v > 0.0)) throw std::invalid_argument("homogeneous dimension must be positive");
    return v;
}

std::vector<double> flatten(const Point& u)
{
    std::vector<double> a(u.h);
    a.push_back(u.t);
    return a;
}

void check_dim(const ParticleMeasure& mu, const Point& u)
{
    if (u.dim() != mu.n) throw std::invalid_argument("point dimension does not match the measure");
}

} // namespace

PolarizationParts polarization_raw(const double* u, const double* z, int n)
{
    double zz = 0.0, uu = 0.0, uz = 0.0;
    for (int i = 0; i < n; ++i) {
        zz += z[i] * z[i];
        uu += u[i] * u[i];
        uz += u[i] * z[i];
    }
    PolarizationParts p;
    p.L = 4.0 * zz * uz;
    p.Q = 2.0 * z[n] * u[n] - 4.0 * uz * uz - 2.0 * zz * uu;
    p.T = 4.0 * uu * uz;
    double dd = 0.0;
    for (int i = 0; i < n; ++i) dd += (z[i] - u[i]) * (z[i] - u[i]);
    const double dt = z[n] - u[n];
    p.V = 0.5 * ((zz * zz + z[n] * z[n]) + (uu * uu + u[n] * u[n]) - (dd * dd + dt * dt));
    return p;
}

PolarizationParts polarization(const Point& u, const Point& z)
{
    if (u.dim() != z.dim()) throw std::invalid_argument("polarization: dimension mismatch");
    const auto a = flatten(u), b = flatten(z);
    return polarization_raw(a.data(), b.data(), u.dim());
}

double moment_constant(double h)
{
    return std::tgamma(h / 4.0 + 1.0);
}

MassEstimate moment(const ParticleMeasure& mu, int k, double s, const Point& u, std::optional<double> h)
{
    if (k < 0) throw std::invalid_argument("moment order must be >= 0");
    if (!(s > 0.0)) throw std::invalid_argument("moment scale s must be positive");
    check_dim(mu, u);
    if (k == 0) return {1.0, 0.0, static_cast<std::int64_t>(mu.size() / static_cast<std::size_t>(mu.group))};
    const double hh = resolve_h(mu, h);
    const double pre = std::pow(s, k + hh / 4.0) / (factorial(k) * moment_constant(hh));
    const auto ua = flatten(u);
    const int n = mu.n;
    return weighted_estimate(mu, [&](const double* z) {
        const PolarizationParts p = polarization_raw(ua.data(), z, n);
        return pre * std::pow(2.0 * p.V, k) * std::exp(-s * norm4_raw(z, n));
    });
}

MassEstimate c_alpha(const ParticleMeasure& mu, const std::array<int, 3>& alpha, double s, const Point& u,
                     std::optional<double> h)
{
    if (alpha[0] < 0 || alpha[1] < 0 || alpha[2] < 0) throw std::invalid_argument("c_alpha: negative multi-index");
    if (alpha[0] + alpha[1] + alpha[2] == 0) throw std::invalid_argument("c_alpha: alpha must be nonzero");
    if (!(s > 0.0)) throw std::invalid_argument("c_alpha: s must be positive");
    check_dim(mu, u);
    const double hh = resolve_h(mu, h);
    const int k = alpha[0] + alpha[1] + alpha[2];
    const double pre = std::pow(s, k + hh / 4.0) /
                       (factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2]) * moment_constant(hh));
    const auto ua = flatten(u);
    const int n = mu.n;
    return weighted_estimate(mu, [&](const double* z) {
        const PolarizationParts p = polarization_raw(ua.data(), z, n);
        return pre * std::pow(p.L, alpha[0]) * std::pow(p.Q, alpha[1]) * std::pow(p.T, alpha[2]) *
               std::exp(-s * norm4_raw(z, n));
    });
}

MomentCurves moment_curves(const ParticleMeasure& mu, double s, std::optional<double> h)
{
    if (!(s > 0.0)) throw std::invalid_argument("moment_curves: s must be positive");
    const double hh = resolve_h(mu, h);
    const int n = mu.n;
    const double C = moment_constant(hh);
    const double pb = 4.0 * std::pow(s, 0.5 + hh / 4.0) / C;
    const double pq1 = 8.0 * std::pow(s, 1.5 + hh / 4.0) / C;
    const double pq2 = std::pow(s, 0.5 + hh / 4.0) / C;
    const double pt = 2.0 * std::pow(s, 1.0 + hh / 4.0) / C;
    // layout: b (n), Q upper triangle row-major, T
    const int nq = n * (n + 1) / 2;
    const int dim = n + nq + 1;
    const auto est = weighted_estimates(mu, dim, [&](const double* z, double* out) {
        double zz = 0.0;
        for (int i = 0; i < n; ++i) zz += z[i] * z[i];
        const double e = std::exp(-s * (zz * zz + z[n] * z[n]));
        for (int i = 0; i < n; ++i) out[i] = pb * zz * z[i] * e;
        int q = n;
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                double v = pq1 * zz * zz * z[i] * z[j] - pq2 * 4.0 * z[i] * z[j];
                if (i == j) v -= pq2 * 2.0 * zz;
                out[q++] = v * e;
            }
        }
        out[q] = pt * z[n] * e;
    });
    MomentCurves c;
    c.s = s;
    c.b.resize(n);
    c.b_se.resize(n);
    c.Q.resize(n, n);
    c.Q_se.resize(n, n);
    for (int i = 0; i < n; ++i) {
        c.b[i] = est[i].value;
        c.b_se[i] = est[i].std_error;
    }
    int q = n;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            c.Q(i, j) = c.Q(j, i) = est[q].value;
            c.Q_se(i, j) = c.Q_se(j, i) = est[q].std_error;
            ++q;
        }
    }
    c.T = est[q].value;
    c.T_se = est[q].std_error;
    return c;
}

FlatnessEstimate flatness_functional(const ParticleMeasure& mu)
{
    const int n = mu.n;
    const int nq = n * (n + 1) / 2;
    const auto est = weighted_estimates(mu, nq, [&](const double* z, double* out) {
        double zz = 0.0;
        for (int i = 0; i < n; ++i) zz += z[i] * z[i];
        const double e = zz * zz * std::exp(-(zz * zz + z[n] * z[n]));
        int q = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) out[q++] = z[i] * z[j] * e;
        }
    });
    FlatnessEstimate F;
    F.M.resize(n, n);
    int q = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) F.M(i, j) = F.M(j, i) = est[q++].value;
    }
    F.n_samples = est.front().n_samples;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F.M);
    if (es.info() != Eigen::Success) throw std::runtime_error("flatness_functional: eigen-decomposition failed");
    F.value = es.eigenvalues()[0];
    F.direction = es.eigenvectors().col(0);
    const Eigen::VectorXd v = F.direction;
    F.std_error = weighted_estimate(mu, [&](const double* z) {
                      double zz = 0.0, zv = 0.0;
                      for (int i = 0; i < n; ++i) {
                          zz += z[i] * z[i];
                          zv += z[i] * v[i];
                      }
                      return zz * zz * zv * zv * std::exp(-(zz * zz + z[n] * z[n]));
                  }).std_error;
    return F;
}

MassEstimate quartic_residual(const ParticleMeasure& mu, const Point& u, std::optional<double> h)
{
    check_dim(mu, u);
    const double hh = resolve_h(mu, h);
    const double C = moment_constant(hh);
    const auto ua = flatten(u);
    const int n = mu.n;
    // 1/alpha! weights for (4,0,0), (2,1,0), (0,2,0), (1,0,1); s = 1
    MassEstimate e = weighted_estimate(mu, [&](const double* z) {
        const PolarizationParts p = polarization_raw(ua.data(), z, n);
        const double L2 = p.L * p.L;
        const double sum = L2 * L2 / 24.0 + L2 * p.Q / 2.0 + p.Q * p.Q / 2.0 + p.L * p.T;
        return sum / C * std::exp(-norm4_raw(z, n));
    });
    e.value -= norm4_raw(ua.data(), n);
    return e;
}

MassEstimate expansion_residual(const ParticleMeasure& mu, const Point& u, double s, int q, std::optional<double> h)
{
    if (q < 1) throw std::invalid_argument("expansion_residual: q must be >= 1");
    if (!(s > 0.0)) throw std::invalid_argument("expansion_residual: s must be positive");
    check_dim(mu, u);
    const double hh = resolve_h(mu, h);
    const double C = moment_constant(hh);
    const int K = 4 * q;
    std::vector<double> pre(static_cast<std::size_t>(K + 1));
    for (int k = 1; k <= K; ++k) pre[k] = std::pow(s, k + hh / 4.0) / (factorial(k) * C);
    const auto ua = flatten(u);
    const int n = mu.n;
    MassEstimate e = weighted_estimate(mu, [&](const double* z) {
        const double v2 = 2.0 * polarization_raw(ua.data(), z, n).V;
        double sum = 0.0, pw = 1.0;
        for (int k = 1; k <= K; ++k) {
            pw *= v2;
            sum += pre[k] * pw;
        }
        return sum * std::exp(-s * norm4_raw(z, n));
    });
    const double u4 = norm4_raw(ua.data(), n);
    double target = 0.0;
    for (int k = 1; k <= q; ++k) target += std::pow(s * u4, k) / factorial(k);
    e.value = std::abs(e.value - target);
    return e;
}

std::vector<double> degeneracy_probe(const ParticleMeasure& mu, const std::vector<double>& s_grid,
                                     std::optional<double> h)
{
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0)) throw std::invalid_argument("degeneracy_probe: s values must be positive");
        if (i > 0 && !(s_grid[i] < s_grid[i - 1])) throw std::invalid_argument("degeneracy_probe: s grid must decrease");
    }
    std::vector<double> out;
    for (double s : s_grid) {
        const MomentCurves c = moment_curves(mu, s, h);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.Q, Eigen::EigenvaluesOnly);
        out.push_back(es.eigenvalues().cwiseAbs().maxCoeff());
    }
    return out;
}

MassEstimate radial_gaussian_integral(const ParticleMeasure& mu, const Point& u, double s, double p)
{
    if (!(s > 0.0)) throw std::invalid_argument("radial_gaussian_integral: s must be positive");
    check_dim(mu, u);
    const auto ua = flatten(u);
    const int n = mu.n;
    return weighted_estimate(mu, [&](const double* z) {
        double h2 = 0.0;
        for (int i = 0; i < n; ++i) h2 += (z[i] - ua[i]) * (z[i] - ua[i]);
        const double r4 = h2 * h2 + (z[n] - ua[n]) * (z[n] - ua[n]);
        return std::pow(r4, p / 4.0) * std::exp(-s * r4);
    });
}

double radial_gaussian_closed_form(double h, double s, double p)
{
    if (!(h + p > 0.0)) throw std::invalid_argument("radial_gaussian_closed_form needs h + p > 0");
    return h / 4.0 * std::pow(s, -(h + p) / 4.0) * std::tgamma((h + p) / 4.0);
}

MomentReport moment_report(const ParticleMeasure& mu, const std::vector<double>& s_grid, bool with_flatness)
{
    MomentReport r;
    r.h = mu.h_dim;
    for (double s : s_grid) r.curves.push_back(moment_curves(mu, s));
    if (with_flatness) r.flatness = flatness_functional(mu);
    return r;
}

std::string to_json(const MomentReport& report)
{
    using nlohmann::json;
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    auto mat = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (int i = 0; i < m.rows(); ++i) {
            std::vector<double> row;
            for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        return rows;
    };
    json j;
    j["h"] = report.h;
    j["curves"] = json::array();
    for (const auto& c : report.curves) {
        j["curves"].push_back({{"s", c.s},
                               {"b", vec(c.b)},
                               {"Q", mat(c.Q)},
                               {"T", c.T},
                               {"stderr", {{"b", vec(c.b_se)}, {"Q", mat(c.Q_se)}, {"T", c.T_se}}}});
    }
    if (report.flatness) {
        j["F"] = {{"value", report.flatness->value},
                  {"stderr", report.flatness->std_error},
                  {"direction", vec(report.flatness->direction)},
                  {"n_samples", report.flatness->n_samples}};
    }
    return j.dump(2);
}

} // namespace pgmt
