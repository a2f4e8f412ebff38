#pragma once

#include <array>
#include <vector>

namespace sanodep::bo {

// Bi-objective point, both coordinates maximised: (g(x(t)), -t).
struct ObjectivePoint {
    double g = 0.0;
    double neg_time = 0.0;

    bool operator==(const ObjectivePoint&) const = default;
};

// a dominates b: no worse in both coordinates and better in one.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

// Non-dominated subset, duplicates removed, sorted by g ascending (so
// neg_time is strictly descending).
std::vector<ObjectivePoint> pareto_front(std::vector<ObjectivePoint> points);

// Exact 2-D hypervolume of the region dominated by `points` and bounded by
// `ref`. Points that do not strictly dominate ref contribute nothing.
double hypervolume_2d(const std::vector<ObjectivePoint>& points, const ObjectivePoint& ref);

// HV(front + batch) - HV(front).
double hvi(const std::vector<ObjectivePoint>& batch, const std::vector<ObjectivePoint>& front,
           const ObjectivePoint& ref);

// HVI together with its gradient w.r.t. each batch point's (g, neg_time).
// Points that are dominated, tied or outside the reference box get zero.
double hvi_with_grad(const std::vector<ObjectivePoint>& batch, const std::vector<ObjectivePoint>& front,
                     const ObjectivePoint& ref, std::vector<std::array<double, 2>>& grad);

}  // namespace sanodep::bo
