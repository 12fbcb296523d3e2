#pragma once

#include <cstdint>
#include <string>

#include "faopd/errors.hpp"

namespace faopd {

// Every tunable of a training run. Field defaults are the shipped
// hyperparameters; parse_config overrides them from `key = value` lines.
struct RunConfig {
    // Teacher / discriminator
    int fm_num_steps = 100;        // Euler steps for FM-based generation
    int discrim_depth = 4;         // hidden layers in the velocity field
    int discrim_num_unit = 128;    // hidden width
    double disc_lr = 1e-4;
    double expert_loss_rate = 1.0;
    double agent_loss_rate = -1.0;
    double student_lr = 1e-4;
    int reward_update_freq = 1;    // iterations between reward refreshes
    bool state_norm = true;
    bool action_norm = false;
    bool reward_norm = false;
    int num_samples = 100;         // Monte Carlo S for Dist estimates
    double temperature = 0.1;
    double noise_scale = 0.5;

    // PPO student
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    int epochs = 10;
    int minibatch = 256;
    int steps_per_iter = 4096;
    double beta = 2.0;             // action-distillation weight
    double entropy_coef = 0.0;
    double grad_clip = 0.5;

    // Run plumbing
    std::string env = "umaze";
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int iterations = 125;

    // Extras
    int disc_batch = 256;              // expert/agent minibatch for the teacher update
    int disc_updates = 1;              // teacher updates per iteration
    bool use_env_reward = false;       // lifts the reward firewall (PPO sanity runs)
    bool distill_mean_mode = false;    // regress mu(s) instead of a sampled action
    int teacher_warmstart_steps = 0;   // optional CFM-only steps before iteration 1

    bool operator==(const RunConfig&) const = default;
};

// Parses the file when path is nonempty, otherwise returns the defaults.
// Format: one `key = value` per line, `#` starts a comment. Unknown keys,
// unparsable values and invariant violations raise ConfigError naming the
// key.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Emits a file parse_config_text() reparses to an equal RunConfig.
std::string serialize_config(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace faopd
