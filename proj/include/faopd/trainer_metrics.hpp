#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "faopd/errors.hpp"

namespace faopd {

struct IterationMetrics {
    int iter = 0;
    long steps = 0;  // cumulative env steps
    double mean_reward = 0.0;   // learned reward over the rollout
    double mean_return = 0.0;   // diagnostic return of finished episodes
    double success_rate = 0.0;  // finished episodes this iteration
    double disc_loss_e = 0.0;
    double disc_loss_a = 0.0;
    double mean_d_e = 0.0;
    double mean_d_a = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double kl = 0.0;
    double distill_loss = 0.0;
    double seconds = 0.0;
};

// CSV sink, one row per iteration, flushed per row.
class MetricsWriter {
public:
    MetricsWriter() = default;
    explicit MetricsWriter(const std::string& path) { open(path); }

    void open(const std::string& path);
    void append(const IterationMetrics& m);
    bool is_open() const { return static_cast<bool>(file_); }

    static const char* header();
    static std::vector<IterationMetrics> load(const std::string& path);

private:
    std::shared_ptr<std::FILE> file_;
};

}  // namespace faopd
