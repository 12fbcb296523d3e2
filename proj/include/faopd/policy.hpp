#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "faopd/adam.hpp"
#include "faopd/config.hpp"
#include "faopd/mlp.hpp"
#include "faopd/teacher.hpp"

namespace faopd {

// Diagonal Gaussian student: state-dependent mean network plus one global
// learnable log-std vector (state-independent, initialized to zeros so the
// initial std is 1).
struct GaussianPolicy {
    Mlp mean_net;
    Tensor log_std;  // shape {1, action_dim}

    GaussianPolicy() = default;
    GaussianPolicy(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden, Rng& rng);

    std::size_t obs_dim() const { return mean_net.in_dim(); }
    std::size_t action_dim() const { return mean_net.out_dim(); }
    std::vector<Tensor*> params();
};

Mlp make_value_net(std::size_t obs_dim, std::size_t hidden, Rng& rng);

struct SampleResult {
    std::vector<double> action;  // pre-clip; the environment clips
    double log_prob = 0.0;
};

// a = mu(obs) + exp(log_std) * eps, eps ~ N(0, I); log_prob is evaluated at
// the unclipped action.
SampleResult policy_sample(const GaussianPolicy& policy, std::span<const double> obs, Rng& rng);
std::vector<double> policy_mean(const GaussianPolicy& policy, std::span<const double> obs);
double policy_logprob(const GaussianPolicy& policy, std::span<const double> obs,
                      std::span<const double> action);
// Diagonal Gaussian entropy: sum_j (log sigma_j + 0.5 log(2 pi e)).
double policy_entropy(const GaussianPolicy& policy);

// On-policy samples of one iteration. Observations are stored as the
// policy consumed them (normalized when state_norm is on); raw_action is
// the pre-clip sample backing log_prob, exec_action the clipped action the
// environment executed (and the joint the teacher scores). diag_reward is
// logging-only and never enters an update.
struct RolloutBuffer {
    std::size_t obs_dim = 0;
    std::size_t act_dim = 0;
    std::vector<double> obs;
    std::vector<double> raw_action;
    std::vector<double> exec_action;
    std::vector<double> log_prob;
    std::vector<double> learned_reward;
    std::vector<double> value;
    std::vector<std::uint8_t> done;
    std::vector<double> diag_reward;
    std::vector<std::uint8_t> success;
    double bootstrap_value = 0.0;  // V of the state after the last row, 0 if done

    std::size_t size() const { return log_prob.size(); }
    void clear();
};

struct GaeResult {
    std::vector<double> raw_advantages;
    std::vector<double> advantages;  // normalized to zero mean, unit variance
    std::vector<double> returns;     // raw_advantages + values
};

// delta_k = r_k + gamma V_{k+1} (1 - done_k) - V_k;
// A_k = delta_k + gamma lambda (1 - done_k) A_{k+1}.
GaeResult gae_advantages(const RolloutBuffer& buffer, double gamma, double lambda);

struct UpdateStats {
    double policy_loss = 0.0;  // averaged over minibatch steps
    double value_loss = 0.0;
    double kl = 0.0;           // mean(ratio - 1 - log ratio) after the update
    double clip_fraction = 0.0;
    double entropy = 0.0;
    double distill_loss = 0.0;
};

struct PolicyLossParts {
    Var loss;
    Var ratio;   // per-row importance ratio
    Var entropy;
    double distill_value = 0.0;
};

// Records one minibatch's policy objective on the tape: clipped surrogate
// minus entropy bonus plus beta times the distillation MSE. mean_vars /
// log_std_var must be the policy bound to this tape. distill_eps supplies
// the reparameterization noise (rows x act); ignored in mean mode.
PolicyLossParts build_policy_loss(Tape& tape, const GaussianPolicy& policy,
                                  const MlpVars& mean_vars, Var log_std_var, const Tensor& obs,
                                  const Tensor& actions, const Tensor& old_logp,
                                  const Tensor& advantages, const Tensor* distill_targets,
                                  const Tensor* distill_eps, const RunConfig& cfg);

// Clipped-surrogate PPO epochs over shuffled minibatches, with the
// action-distillation penalty folded into the policy loss at weight beta.
// distill_targets (size x act_dim) are teacher actions cached for the whole
// rollout; pass nullptr when beta is 0.
UpdateStats ppo_update(GaussianPolicy& policy, Mlp& value_net, Adam& opt_policy,
                       Adam& opt_value, const RolloutBuffer& buffer, const GaeResult& gae,
                       const Tensor* distill_targets, const RunConfig& cfg, Rng& rng);

// Mean squared error between reparameterized student actions and teacher
// actions generated at the given (already normalized) states; the teacher
// target is a constant. Value-only form of the penalty inside ppo_update.
double action_distill_loss(const GaussianPolicy& policy, const FmTeacher& teacher,
                           const Tensor& states, int fm_steps, std::uint64_t seed,
                           bool mean_mode = false);

}  // namespace faopd
