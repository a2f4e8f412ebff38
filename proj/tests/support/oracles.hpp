#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sanodep/pareto.hpp"

namespace oracle {

// Central difference of a scalar function of a vector.
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                    double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double o = x(i);
        x(i) = o + h;
        const double a = f(x);
        x(i) = o - h;
        const double b = f(x);
        x(i) = o;
        g(i) = (a - b) / (2 * h);
    }
    return g;
}

inline double rel_error(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Dominated area by midpoint-rule counting on an n x n grid over the box
// [ref, upper].
inline double hypervolume_grid(const std::vector<sanodep::bo::ObjectivePoint>& pts,
                               const sanodep::bo::ObjectivePoint& ref, const sanodep::bo::ObjectivePoint& upper,
                               int n) {
    const double wx = (upper.g - ref.g) / n, wy = (upper.neg_time - ref.neg_time) / n;
    long covered = 0;
    for (int i = 0; i < n; ++i) {
        const double x = ref.g + (i + 0.5) * wx;
        // For fixed x the covered y-range is [ref, max y over points with g >= x].
        double ymax = ref.neg_time;
        for (const auto& p : pts)
            if (p.g >= x) ymax = std::max(ymax, p.neg_time);
        for (int j = 0; j < n; ++j)
            if (ref.neg_time + (j + 0.5) * wy <= ymax) ++covered;
    }
    return static_cast<double>(covered) * wx * wy;
}

// O(n^2) non-dominated filter, duplicates kept once, sorted by g.
inline std::vector<sanodep::bo::ObjectivePoint> pareto_naive(const std::vector<sanodep::bo::ObjectivePoint>& pts) {
    std::vector<sanodep::bo::ObjectivePoint> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            const auto& a = pts[j];
            const auto& b = pts[i];
            dominated = a.g >= b.g && a.neg_time >= b.neg_time && (a.g > b.g || a.neg_time > b.neg_time);
        }
        if (!dominated && std::find(out.begin(), out.end(), pts[i]) == out.end()) out.push_back(pts[i]);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.g < b.g; });
    return out;
}

// GP posterior by explicit inverse (no Cholesky), RBF kernel with one
// lengthscale per input column.
inline void gp_naive(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& Xq,
                     const Eigen::VectorXd& ls, double sf2, double sn2, Eigen::VectorXd& mean, Eigen::VectorXd& var) {
    auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        double r = 0;
        for (Eigen::Index d = 0; d < a.size(); ++d) r += (a(d) - b(d)) * (a(d) - b(d)) / (ls(d) * ls(d));
        return sf2 * std::exp(-0.5 * r);
    };
    const auto n = X.rows(), m = Xq.rows();
    Eigen::MatrixXd K(n, n), Ks(m, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(X.row(i), X.row(j)) + (i == j ? sn2 : 0.0);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) Ks(i, j) = k(Xq.row(i), X.row(j));
    const Eigen::MatrixXd Kinv = K.inverse();
    mean = Ks * Kinv * y;
    var.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) var(i) = sf2 - (Ks.row(i) * Kinv * Ks.row(i).transpose())(0, 0);
}

}  // namespace oracle
