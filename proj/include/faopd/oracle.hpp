#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faopd/config.hpp"
#include "faopd/errors.hpp"

namespace faopd {

// Diagonal Gaussian used as a known test distribution.
struct GaussianSpec {
    std::vector<double> mean;
    std::vector<double> stddev;

    GaussianSpec() = default;
    GaussianSpec(std::vector<double> m, std::vector<double> s);
    std::size_t dim() const { return mean.size(); }
    bool operator==(const GaussianSpec&) const = default;
};

double gaussian_log_density(const GaussianSpec& g, std::span<const double> x);

// Closed-form log p(x) - log q(x) for diagonal Gaussians.
double gaussian_log_ratio(std::span<const double> x, const GaussianSpec& p,
                          const GaussianSpec& q);

// Spearman rank correlation; ties get average ranks. Constant inputs have
// no defined correlation and raise ContractError.
double rank_correlation(std::span<const double> a, std::span<const double> b);

struct VerifyCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool degenerate = false;  // expert == agent: correlation checks skipped
    bool training_ok = true;
    bool all_pass() const;
};

// Trains a conditional teacher on samples of two known 2D Gaussians
// (expert as c=1, agent as c=0) with the plain CFM objective, then probes
// the reward on a 10x10 grid: Spearman((tau/2) r, analytic log ratio) and
// Spearman(Dist(.|1), -log p_expert) must both reach 0.9, and the reward
// must satisfy the algebraic difference identity to 1e-9.
VerifyReport verify_reward_ratio(const RunConfig& cfg, std::uint64_t seed,
                                 const GaussianSpec& expert, const GaussianSpec& agent,
                                 int train_steps = 6000);

// Default spec: expert N((0,0), 0.25^2 I), agent N((1,1), 0.25^2 I).
VerifyReport verify_reward_ratio(const RunConfig& cfg, std::uint64_t seed);

// One line per check: `check=<name> value=<float> threshold=<float> pass=<bool>`.
std::string format_report(const VerifyReport& rep);
void write_report(const VerifyReport& rep, const std::string& path);

}  // namespace faopd
