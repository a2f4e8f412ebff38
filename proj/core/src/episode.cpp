#include "sanodep/episode.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "sanodep/errors.hpp"

namespace sanodep::zoo {

namespace {

void check_config(const EpisodeConfig& c) {
    if (c.M_min < 0 || c.M_max < c.M_min || c.m_min < 0 || c.m_max < c.m_min || c.n_min < 0 || c.n_max < c.n_min)
        throw PreconditionError("episode config: invalid ranges");
    if (!(c.forecast_prob >= 0.0 && c.forecast_prob <= 1.0))
        throw PreconditionError("episode config: forecast probability outside [0, 1]");
}

// k distinct indices drawn from pool (partial Fisher-Yates), returned sorted.
std::vector<int> draw(std::vector<int> pool, int k, Rng& rng) {
    k = std::min<int>(k, static_cast<int>(pool.size()));
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<int> range(int lo, int hi) {
    std::vector<int> v(static_cast<std::size_t>(std::max(0, hi - lo)));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

std::vector<int> merge(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<int> minus(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Context trajectory: m points anywhere on the grid, targets add n more.
TrajectoryMask context_mask(int traj, int n_grid, const EpisodeConfig& c, Rng& rng) {
    TrajectoryMask m;
    m.trajectory = traj;
    const int mc = static_cast<int>(rng.uniform_int(std::max(1, c.m_min), std::max(1, c.m_max)));
    const int nt = static_cast<int>(rng.uniform_int(c.n_min, c.n_max));
    m.context = draw(range(0, n_grid), mc, rng);
    m.target = merge(m.context, draw(minus(range(0, n_grid), m.context), nt, rng));
    return m;
}

// New trajectory: the initial observation is always in context and targets.
TrajectoryMask new_mask(int traj, int n_grid, bool forecast, const EpisodeConfig& c, Rng& rng) {
    TrajectoryMask m;
    m.trajectory = traj;
    const int mc = static_cast<int>(rng.uniform_int(c.m_min, c.m_max));
    const int nt = static_cast<int>(rng.uniform_int(c.n_min, c.n_max));
    const std::vector<int> later = draw(range(1, n_grid), mc + nt, rng);
    m.target = merge({0}, later);
    if (forecast) {
        m.context = {0};
    } else {
        // The first mc of a random subset of the targets.
        m.context = merge({0}, draw(later, mc, rng));
    }
    return m;
}

}  // namespace

Episode sample_episode(const TrajectorySet& set, const EpisodeConfig& config, Rng& rng) {
    check_config(config);
    const int n = static_cast<int>(set.trajectories.size());
    if (n < config.M_max + 1) throw PreconditionError("sample_episode: need at least M_max + 1 trajectories");
    const int n_grid = static_cast<int>(set.t_grid.size());
    const int M = static_cast<int>(rng.uniform_int(config.M_min, config.M_max));
    const std::vector<int> chosen = draw(range(0, n), M + 1, rng);
    // Random role assignment among the chosen trajectories.
    const int new_slot = static_cast<int>(rng.uniform_int(0, M));
    Episode ep;
    ep.forecast = rng.bernoulli(config.forecast_prob);
    for (int i = 0; i <= M; ++i) {
        if (i == new_slot) continue;
        ep.context_trajectories.push_back(context_mask(chosen[static_cast<std::size_t>(i)], n_grid, config, rng));
    }
    ep.new_trajectory = new_mask(chosen[static_cast<std::size_t>(new_slot)], n_grid, ep.forecast, config, rng);
    return ep;
}

std::vector<Episode> sample_episode_batch(const TrajectorySet& set, const EpisodeConfig& config, Rng& rng) {
    check_config(config);
    const int n = static_cast<int>(set.trajectories.size());
    const int n_grid = static_cast<int>(set.t_grid.size());
    if (n < 1) throw PreconditionError("sample_episode_batch: empty trajectory set");
    const int M = static_cast<int>(rng.uniform_int(config.M_min, std::min(config.M_max, n - 1)));
    std::vector<TrajectoryMask> contexts;
    for (int l = 0; l < M; ++l) contexts.push_back(context_mask(l, n_grid, config, rng));

    std::vector<Episode> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Episode ep;
        ep.forecast = rng.bernoulli(config.forecast_prob);
        for (int l = 0; l < M; ++l)
            if (l != k) ep.context_trajectories.push_back(contexts[static_cast<std::size_t>(l)]);
        if (k < M && !ep.forecast) {
            const TrajectoryMask& own = contexts[static_cast<std::size_t>(k)];
            ep.new_trajectory.trajectory = k;
            ep.new_trajectory.context = merge({0}, own.context);
            ep.new_trajectory.target = merge({0}, own.target);
        } else {
            ep.new_trajectory = new_mask(k, n_grid, ep.forecast, config, rng);
        }
        out.push_back(std::move(ep));
    }
    return out;
}

ObservedTrajectory observe(const Trajectory& tr, const std::vector<int>& indices) {
    ObservedTrajectory o;
    o.x0 = tr.x0;
    o.t0 = tr.times.empty() ? 0.0 : tr.times.front();
    for (int i : indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= tr.times.size())
            throw DimensionError("observe: index out of range");
        o.times.push_back(tr.times[static_cast<std::size_t>(i)]);
        o.states.push_back(tr.states[static_cast<std::size_t>(i)]);
    }
    return o;
}

void validate_episode(const Episode& ep, const TrajectorySet& set) {
    const int n_grid = static_cast<int>(set.t_grid.size());
    std::set<int> used;
    auto check_mask = [&](const TrajectoryMask& m) {
        if (m.trajectory < 0 || static_cast<std::size_t>(m.trajectory) >= set.trajectories.size())
            throw StateError("episode: trajectory index out of range");
        if (!used.insert(m.trajectory).second) throw StateError("episode: trajectory used twice");
        if (!std::includes(m.target.begin(), m.target.end(), m.context.begin(), m.context.end()))
            throw StateError("episode: context is not a subset of the targets");
        for (int i : m.target)
            if (i < 0 || i >= n_grid) throw StateError("episode: grid index out of range");
    };
    for (const auto& c : ep.context_trajectories) check_mask(c);
    check_mask(ep.new_trajectory);
    if (ep.new_trajectory.context.empty() || ep.new_trajectory.context.front() != 0)
        throw StateError("episode: new trajectory context lacks its initial observation");
    if (ep.forecast && ep.new_trajectory.context.size() != 1)
        throw StateError("episode: forecast context must be the initial observation only");
}

}  // namespace sanodep::zoo
