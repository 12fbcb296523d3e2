#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "faopd/errors.hpp"

namespace faopd {

// Welford accumulator over observation vectors. The applied transform is
// (x - mean)/sqrt(var + 1e-8) with var = M2/count; before any update it is
// the identity. Training freezes a copy per iteration so one rollout sees
// one consistent transform.
class RunningNormalizer {
public:
    RunningNormalizer() = default;
    explicit RunningNormalizer(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

    void update(std::span<const double> x);
    void update_rows(const double* rows, std::size_t n, std::size_t dim);

    std::size_t dim() const { return mean_.size(); }
    std::uint64_t count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& m2() const { return m2_; }
    std::vector<double> variance() const;

    void normalize(std::span<const double> in, std::span<double> out) const;
    std::vector<double> normalized(std::span<const double> in) const;

    // For checkpoint restore.
    static RunningNormalizer restore(std::uint64_t count, std::vector<double> mean,
                                     std::vector<double> m2);

private:
    std::uint64_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

}  // namespace faopd
