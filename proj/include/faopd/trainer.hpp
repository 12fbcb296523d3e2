#pragma once

#include <functional>
#include <memory>
#include <string>

#include "faopd/config.hpp"
#include "faopd/demos.hpp"
#include "faopd/normalizer.hpp"
#include "faopd/policy.hpp"
#include "faopd/reward.hpp"
#include "faopd/trainer_metrics.hpp"

namespace faopd {

struct EvalResult {
    double success_rate = 0.0;
    double mean_return = 0.0;  // summed diagnostic reward per episode
};

// Generic evaluation loop; the actor sees the raw observation and its
// episode seed. Used for policies, the scripted expert and random actors.
using ActorFn = std::function<Action(const EnvState& state, std::uint64_t episode_seed)>;
EvalResult evaluate_actor(const ActorFn& actor, const EnvSpec& spec, int episodes,
                          std::uint64_t seed);

// Deterministic mode acts with the mean; otherwise samples.
EvalResult evaluate_policy(const GaussianPolicy& policy, const RunningNormalizer& norm,
                           const EnvSpec& spec, int episodes, std::uint64_t seed,
                           bool deterministic);

// Fraction of eval episodes whose trajectory midpoint lies left of x=0.5;
// the mode-commitment probe for the two-mode maze.
double eval_left_route_fraction(const GaussianPolicy& policy, const RunningNormalizer& norm,
                                const EnvSpec& spec, int episodes, std::uint64_t seed);

// The outer training loop: rollout, reward relabeling, student update,
// teacher update, normalizer update, metrics row.
class Trainer {
public:
    Trainer(RunConfig cfg, DemoDataset demos);

    IterationMetrics train_iteration();

    const RunConfig& config() const { return cfg_; }
    const EnvSpec& env() const { return env_; }
    const GaussianPolicy& policy() const { return policy_; }
    const Mlp& value_net() const { return value_net_; }
    const FmTeacher& teacher() const { return teacher_; }
    FmTeacher& mutable_teacher() { return teacher_; }
    const RunningNormalizer& normalizer() const { return norm_; }
    long env_steps() const { return env_steps_; }
    int iteration() const { return iter_; }

private:
    void collect_rollout(const RunningNormalizer& frozen);
    void relabel_rewards(const RunningNormalizer& frozen);
    Tensor expert_joint_batch(std::size_t rows, const RunningNormalizer& frozen);
    Tensor agent_joint_batch(std::size_t rows);

    RunConfig cfg_;
    EnvSpec env_;
    DemoDataset demos_;
    Rng rng_;

    FmTeacher teacher_;
    FmTeacher reward_teacher_;  // snapshot used for relabeling (reward_update_freq)
    GaussianPolicy policy_;
    Mlp value_net_;
    RewardHead head_;
    std::unique_ptr<Adam> opt_teacher_, opt_policy_, opt_value_;
    RunningNormalizer norm_;

    RolloutBuffer buffer_;
    std::vector<double> raw_obs_;  // unnormalized copies feeding the normalizer update
    EnvState env_state_;
    std::uint64_t episode_counter_ = 0;
    double episode_return_ = 0.0;  // running diagnostic return of the live episode

    long env_steps_ = 0;
    int iter_ = 0;

    // Per-iteration episode bookkeeping filled by collect_rollout.
    int episodes_done_ = 0, episodes_succeeded_ = 0;
    double finished_return_sum_ = 0.0;
};

}  // namespace faopd
