#include "faopd/normalizer.hpp"

#include <cmath>

namespace faopd {

void RunningNormalizer::update(std::span<const double> x) {
    if (x.size() != mean_.size()) throw DimensionError("RunningNormalizer: dim mismatch");
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double delta = x[i] - mean_[i];
        mean_[i] += delta * inv;
        m2_[i] += delta * (x[i] - mean_[i]);
    }
}

void RunningNormalizer::update_rows(const double* rows, std::size_t n, std::size_t dim) {
    if (dim != mean_.size()) throw DimensionError("RunningNormalizer: dim mismatch");
    for (std::size_t r = 0; r < n; ++r) update(std::span<const double>(rows + r * dim, dim));
}

std::vector<double> RunningNormalizer::variance() const {
    std::vector<double> v(mean_.size(), 0.0);
    if (count_ == 0) return v;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = m2_[i] / static_cast<double>(count_);
    return v;
}

void RunningNormalizer::normalize(std::span<const double> in, std::span<double> out) const {
    if (in.size() != mean_.size() || out.size() != mean_.size()) {
        throw DimensionError("RunningNormalizer::normalize: dim mismatch");
    }
    if (count_ == 0) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i];
        return;
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double var = m2_[i] / static_cast<double>(count_);
        out[i] = (in[i] - mean_[i]) / std::sqrt(var + 1e-8);
    }
}

std::vector<double> RunningNormalizer::normalized(std::span<const double> in) const {
    std::vector<double> out(in.size());
    normalize(in, out);
    return out;
}

RunningNormalizer RunningNormalizer::restore(std::uint64_t count, std::vector<double> mean,
                                             std::vector<double> m2) {
    if (mean.size() != m2.size()) throw DimensionError("RunningNormalizer::restore: dim mismatch");
    RunningNormalizer n(mean.size());
    n.count_ = count;
    n.mean_ = std::move(mean);
    n.m2_ = std::move(m2);
    return n;
}

}  // namespace faopd
