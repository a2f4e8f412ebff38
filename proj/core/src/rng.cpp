#include "sanodep/rng.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "sanodep/errors.hpp"

namespace sanodep {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
bool g_warnings = true;
}  // namespace

void log_warning(const std::string& message) {
    if (g_warnings) std::cerr << "[sanodep] warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings = enabled; }

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}

Rng::result_type Rng::operator()() {
    ++counter_;
    return mix64(key_ + kGolden * counter_);
}

Rng Rng::split(std::uint64_t stream) const {
    return Rng(mix64(key_ ^ mix64(stream + 0x632BE59BD9B4E019ULL)), 0);
}

double Rng::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw PreconditionError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>((*this)());
    const std::uint64_t limit = max() - max() % span;
    std::uint64_t r;
    do {
        r = (*this)();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Eigen::MatrixXd Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
}

}  // namespace sanodep
