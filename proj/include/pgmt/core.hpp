#pragma once

#include <cmath>
#include <stdexcept>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace pgmt {

// A point of P^n: horizontal coordinates h in R^n and the time coordinate t.
struct Point {
    std::vector<double> h;
    double t = 0.0;

    Point() = default;
    Point(std::vector<double> h_, double t_);

    int dim() const { return static_cast<int>(h.size()); }
    static Point origin(int n);
};

enum class Metric { Koranyi, BoxInf };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

Point add(const Point& a, const Point& b);
Point sub(const Point& a, const Point& b);
Point dilate(const Point& x, double lambda);

// Homogeneous norm of the vector with squared horizontal length h2 and time part t.
inline double hom_norm(double h2, double t, Metric m);

double norm(const Point& x, Metric m);
double distance(const Point& x, const Point& y, Metric m);

// Raw-coordinate variant for hot loops: a and b point to n+1 doubles (h then t).
double distance_raw(const double* a, const double* b, int n, Metric m);

// Distance from interior point g to the complement of the closed ball B(x, r).
double boundary_distance(const Point& g, const Point& x, double r, Metric m);

// Homogeneous subgroup: V_1 (orthonormal basis in R^n), optionally times the t-axis.
struct HomSubgroup {
    int n = 0;
    std::vector<std::vector<double>> basis;
    bool includes_vertical = false;

    HomSubgroup(int n_, std::vector<std::vector<double>> basis_, bool vertical);
    int homogeneous_dimension() const;
};

std::pair<int, int> stratification(const HomSubgroup& V);

// The affine vertical set {x : <u, x_H> = c}.
struct VerticalHyperplane {
    std::vector<double> normal;
    double offset = 0.0;

    VerticalHyperplane(std::vector<double> u, double c);
    int dim() const { return static_cast<int>(normal.size()); }
};

double plane_distance(const Point& x, const VerticalHyperplane& V, Metric m);

// Orthonormal basis of the complement of unit vector u in R^n (n-1 vectors).
std::vector<std::vector<double>> orthonormal_complement(const std::vector<double>& u);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

// Area of the unit sphere S^{k} in R^{k+1}; S^0 has two points.
double sphere_area(int k);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; results kept in index order.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

inline double hom_norm(double h2, double t, Metric m)
{
    if (m == Metric::Koranyi) {
        return std::sqrt(std::sqrt(h2 * h2 + t * t));
    }
    const double a = std::sqrt(h2);
    const double b = std::sqrt(std::abs(t));
    return a > b ? a : b;
}

} // namespace pgmt
