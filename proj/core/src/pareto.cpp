#include "sanodep/pareto.hpp"

#include <algorithm>

namespace sanodep::bo {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
    return a.g >= b.g && a.neg_time >= b.neg_time && (a.g > b.g || a.neg_time > b.neg_time);
}

std::vector<ObjectivePoint> pareto_front(std::vector<ObjectivePoint> pts) {
    // Sort by g descending, ties by neg_time descending; sweep keeping points
    // that strictly improve neg_time.
    std::sort(pts.begin(), pts.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
        return a.g != b.g ? a.g > b.g : a.neg_time > b.neg_time;
    });
    std::vector<ObjectivePoint> front;
    for (const auto& p : pts)
        if (front.empty() || p.neg_time > front.back().neg_time) front.push_back(p);
    std::reverse(front.begin(), front.end());
    return front;
}

namespace {

struct Tagged {
    ObjectivePoint p;
    int index;  // batch index, -1 for front points
};

// Sweep over strictly-dominating points sorted by g descending. Accumulates
// the gradient for tagged points when grad is non-null.
double sweep(std::vector<Tagged> pts, const ObjectivePoint& ref, std::vector<std::array<double, 2>>* grad) {
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](const Tagged& t) { return !(t.p.g > ref.g && t.p.neg_time > ref.neg_time); }),
              pts.end());
    // Front points first among exact ties so batch duplicates get no credit.
    std::sort(pts.begin(), pts.end(), [](const Tagged& a, const Tagged& b) {
        if (a.p.g != b.p.g) return a.p.g > b.p.g;
        if (a.p.neg_time != b.p.neg_time) return a.p.neg_time > b.p.neg_time;
        return a.index < b.index;
    });
    std::vector<Tagged> front;
    for (const auto& t : pts)
        if (front.empty() || t.p.neg_time > front.back().p.neg_time) front.push_back(t);
    double hv = 0.0;
    double y_prev = ref.neg_time;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto& p = front[i].p;
        hv += (p.g - ref.g) * (p.neg_time - y_prev);
        if (grad && front[i].index >= 0) {
            const double g_next = i + 1 < front.size() ? front[i + 1].p.g : ref.g;
            auto& gr = (*grad)[static_cast<std::size_t>(front[i].index)];
            gr[0] += p.neg_time - y_prev;
            gr[1] += p.g - g_next;
        }
        y_prev = p.neg_time;
    }
    return hv;
}

std::vector<Tagged> tag(const std::vector<ObjectivePoint>& pts, bool batch) {
    std::vector<Tagged> out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i], batch ? static_cast<int>(i) : -1});
    return out;
}

}  // namespace

double hypervolume_2d(const std::vector<ObjectivePoint>& points, const ObjectivePoint& ref) {
    return sweep(tag(points, false), ref, nullptr);
}

double hvi(const std::vector<ObjectivePoint>& batch, const std::vector<ObjectivePoint>& front,
           const ObjectivePoint& ref) {
    std::vector<Tagged> all = tag(front, false);
    const auto b = tag(batch, false);
    all.insert(all.end(), b.begin(), b.end());
    return std::max(0.0, sweep(std::move(all), ref, nullptr) - hypervolume_2d(front, ref));
}

double hvi_with_grad(const std::vector<ObjectivePoint>& batch, const std::vector<ObjectivePoint>& front,
                     const ObjectivePoint& ref, std::vector<std::array<double, 2>>& grad) {
    grad.assign(batch.size(), {0.0, 0.0});
    std::vector<Tagged> all = tag(front, false);
    const auto b = tag(batch, true);
    all.insert(all.end(), b.begin(), b.end());
    return std::max(0.0, sweep(std::move(all), ref, &grad) - hypervolume_2d(front, ref));
}

}  // namespace sanodep::bo
