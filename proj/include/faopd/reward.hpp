#pragma once

#include <cstdint>

#include "faopd/adam.hpp"
#include "faopd/teacher.hpp"

namespace faopd {

// Temperature and branch weights of the FM-enhanced discriminator.
// agent_loss_rate is stored with the sign convention of the original
// hyperparameter table; its magnitude weighs the agent BCE branch.
struct RewardHead {
    double temperature = 0.1;
    double expert_loss_rate = 1.0;
    double agent_loss_rate = -1.0;
};

// D = exp(-dist1/tau) / (exp(-dist1/tau) + exp(-dist0/tau)), evaluated as
// sigmoid((dist0 - dist1)/tau) so it stays strictly inside (0,1).
double discriminator_prob(double dist1, double dist0, double temperature);

// r = log D - log(1-D). The softmax partition cancels, so this is computed
// directly as (dist0 - dist1)/tau; the two routes agree to 1e-9 wherever
// the log route is representable.
double airl_reward(double dist1, double dist0, double temperature);

struct DiscStepStats {
    double expert_loss = 0.0;   // mean -log D over the expert batch
    double agent_loss = 0.0;    // mean -log(1-D) over the agent batch
    double mean_d_expert = 0.0;
    double mean_d_agent = 0.0;
};

struct DiscLossBuild {
    Var loss;       // weighted BCE, ready for backward()
    Var z_expert;   // per-row (dist0 - dist1)/tau, expert batch
    Var z_agent;
    Var loss_expert;  // unweighted branch means
    Var loss_agent;
};

// Records the full discriminator loss on the tape (vars = teacher.vnet
// bound to it). Used by disc_training_step and directly grad-checkable.
DiscLossBuild disc_loss_var(Tape& tape, const FmTeacher& teacher, const MlpVars& vars,
                            const RewardHead& head, const Tensor& expert_batch,
                            const Tensor& agent_batch, std::uint64_t seed);

// One adversarial update of the teacher: differentiable single-sample Dist
// under both class conditions for every batch row, softmax discriminator,
// weighted BCE (expert label 1, agent label 0), one optimizer step.
// Each row's (t, x0) draw is shared between the c=1 and c=0 branches.
DiscStepStats disc_training_step(FmTeacher& teacher, const RewardHead& head,
                                 const Tensor& expert_batch, const Tensor& agent_batch,
                                 Adam& optimizer, std::uint64_t seed);

// Scoring-only variant (no gradients, no update) used for probes.
DiscStepStats disc_eval(const FmTeacher& teacher, const RewardHead& head,
                        const Tensor& expert_batch, const Tensor& agent_batch, int samples,
                        std::uint64_t seed);

}  // namespace faopd
