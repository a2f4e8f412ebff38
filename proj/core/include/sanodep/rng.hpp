#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace sanodep {

/// Counter-based generator. Draw i is a keyed hash of (key, i), so a stream
/// can be split into independent children without touching the parent.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Child stream identified by `stream`. Does not advance this generator.
    Rng split(std::uint64_t stream) const;

    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double normal();                         // standard normal, Box-Muller
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
    bool bernoulli(double p);

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    Rng(std::uint64_t key, int) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace sanodep
