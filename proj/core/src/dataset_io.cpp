#include "sanodep/dataset_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "sanodep/errors.hpp"
#include "sanodep/format.hpp"

namespace sanodep::zoo {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

}  // namespace

void write_trajectory_set(std::ostream& os, const TrajectorySet& set, std::uint64_t seed) {
    const int d = state_dim(set.family);
    os << "# family=" << to_string(set.family) << " seed=" << seed << " state_dim=" << d
       << " n_grid=" << set.t_grid.size() << '\n';
    os << "# params=";
    for (Eigen::Index i = 0; i < set.system.params.size(); ++i)
        os << (i ? ";" : "") << format_double(set.system.params(i));
    os << '\n';
    os << "trajectory_id,t";
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    os << '\n';
    for (std::size_t k = 0; k < set.trajectories.size(); ++k) {
        const Trajectory& tr = set.trajectories[k];
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            os << k << ',' << format_double(tr.times[i]);
            for (Eigen::Index j = 0; j < tr.states[i].size(); ++j) os << ',' << format_double(tr.states[i](j));
            os << '\n';
        }
    }
}

void save_trajectory_set(const std::string& path, const TrajectorySet& set, std::uint64_t seed) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);
    write_trajectory_set(os, set, seed);
}

LoadedTrajectorySet read_trajectory_set(std::istream& is) {
    LoadedTrajectorySet out;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw FormatError("trajectory file: missing header");
    std::map<std::string, std::string> kv;
    for (const auto& tok : split(line.substr(2), ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError("trajectory file: bad header token " + tok);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* key : {"family", "seed", "state_dim", "n_grid"})
        if (!kv.count(key)) throw FormatError(std::string("trajectory file: header lacks ") + key);
    const Family fam = family_from_string(kv["family"]);
    const int d = static_cast<int>(parse_int(kv["state_dim"]));
    const auto n_grid = static_cast<std::size_t>(parse_int(kv["n_grid"]));
    if (d != state_dim(fam)) throw FormatError("trajectory file: state_dim does not match family");
    out.seed = static_cast<std::uint64_t>(std::stoull(kv["seed"]));
    out.set.family = fam;
    out.set.system.family = fam;

    if (!std::getline(is, line) || line.rfind("# params=", 0) != 0)
        throw FormatError("trajectory file: missing params line");
    const std::string plist = line.substr(9);
    std::vector<double> params;
    if (!plist.empty())
        for (const auto& tok : split(plist, ';')) params.push_back(parse_double(tok));
    out.set.system.params = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));

    if (!std::getline(is, line) || line.rfind("trajectory_id,t", 0) != 0)
        throw FormatError("trajectory file: missing column header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != static_cast<std::size_t>(d) + 2) throw FormatError("trajectory file: wrong column count");
        const auto id = static_cast<std::size_t>(parse_int(cells[0]));
        if (id > out.set.trajectories.size()) throw FormatError("trajectory file: trajectory ids out of order");
        if (id == out.set.trajectories.size()) out.set.trajectories.emplace_back();
        Trajectory& tr = out.set.trajectories[id];
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x(j) = parse_double(cells[static_cast<std::size_t>(j) + 2]);
        if (tr.times.empty()) tr.x0 = x;
        tr.times.push_back(parse_double(cells[1]));
        tr.states.push_back(std::move(x));
    }
    for (const auto& tr : out.set.trajectories)
        if (tr.times.size() != n_grid) throw FormatError("trajectory file: trajectory length differs from n_grid");
    if (!out.set.trajectories.empty()) out.set.t_grid = out.set.trajectories.front().times;
    return out;
}

LoadedTrajectorySet load_trajectory_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);
    return read_trajectory_set(is);
}

}  // namespace sanodep::zoo
