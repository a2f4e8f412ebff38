#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sanodep/system_zoo.hpp"

namespace sanodep::zoo {

// Text format: two comment header lines (family, seed, state_dim, n_grid and
// the system parameters), a column header, then one row per observation:
// trajectory_id,t,x1..xd.
void write_trajectory_set(std::ostream& os, const TrajectorySet& set, std::uint64_t seed);
void save_trajectory_set(const std::string& path, const TrajectorySet& set, std::uint64_t seed);

struct LoadedTrajectorySet {
    TrajectorySet set;
    std::uint64_t seed = 0;
};

LoadedTrajectorySet read_trajectory_set(std::istream& is);
LoadedTrajectorySet load_trajectory_set(const std::string& path);

}  // namespace sanodep::zoo
