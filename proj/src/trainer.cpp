#include "faopd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

namespace faopd {

// ---------------------------------------------------------------------------
// Metrics CSV

const char* MetricsWriter::header() {
    return "iter,steps,mean_reward,mean_return,success_rate,disc_loss_e,disc_loss_a,"
           "mean_D_e,mean_D_a,policy_loss,value_loss,kl,distill_loss,seconds";
}

void MetricsWriter::open(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("metrics: cannot open \"" + path + "\" for writing");
    file_ = std::shared_ptr<std::FILE>(f, [](std::FILE* p) {
        if (p) std::fclose(p);
    });
    std::fprintf(f, "%s\n", header());
    std::fflush(f);
}

void MetricsWriter::append(const IterationMetrics& m) {
    if (!file_) throw ContractError("metrics: writer not open");
    std::fprintf(file_.get(),
                 "%d,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6g\n",
                 m.iter, m.steps, m.mean_reward, m.mean_return, m.success_rate, m.disc_loss_e,
                 m.disc_loss_a, m.mean_d_e, m.mean_d_a, m.policy_loss, m.value_loss, m.kl,
                 m.distill_loss, m.seconds);
    std::fflush(file_.get());
}

std::vector<IterationMetrics> MetricsWriter::load(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("metrics: file not found: \"" + path + "\"");
    std::vector<IterationMetrics> rows;
    char line[1024];
    bool first = true;
    while (std::fgets(line, sizeof(line), f)) {
        if (first) {
            first = false;
            if (std::strncmp(line, "iter,", 5) != 0) {
                std::fclose(f);
                throw IoError("metrics: missing header in \"" + path + "\"");
            }
            continue;
        }
        IterationMetrics m;
        const int got = std::sscanf(
            line, "%d,%ld,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &m.iter, &m.steps,
            &m.mean_reward, &m.mean_return, &m.success_rate, &m.disc_loss_e, &m.disc_loss_a,
            &m.mean_d_e, &m.mean_d_a, &m.policy_loss, &m.value_loss, &m.kl, &m.distill_loss,
            &m.seconds);
        if (got != 14) {
            std::fclose(f);
            throw IoError("metrics: malformed row in \"" + path + "\"");
        }
        rows.push_back(m);
    }
    std::fclose(f);
    return rows;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate_actor(const ActorFn& actor, const EnvSpec& spec, int episodes,
                          std::uint64_t seed) {
    if (episodes < 1) throw ContractError("evaluate: episodes must be >= 1");
    EvalResult out;
    for (int ep = 0; ep < episodes; ++ep) {
        const std::uint64_t ep_seed = Rng::mix(seed, static_cast<std::uint64_t>(ep));
        EnvState st = env_reset(spec, ep_seed);
        double ret = 0.0;
        while (true) {
            StepResult r = env_step(spec, st, actor(st, ep_seed));
            ret += r.transition.diag_env_reward();
            st = r.next;
            if (r.transition.done) {
                if (r.transition.success) out.success_rate += 1.0;
                break;
            }
        }
        out.mean_return += ret;
    }
    out.success_rate /= episodes;
    out.mean_return /= episodes;
    return out;
}

EvalResult evaluate_policy(const GaussianPolicy& policy, const RunningNormalizer& norm,
                           const EnvSpec& spec, int episodes, std::uint64_t seed,
                           bool deterministic) {
    auto actor = [&](const EnvState& st, std::uint64_t ep_seed) {
        const auto raw = observe(st);
        const std::vector<double> obs = norm.normalized(raw);
        std::vector<double> a;
        if (deterministic) {
            a = policy_mean(policy, obs);
        } else {
            Rng step_rng(Rng::mix(ep_seed, 0xAC7 + static_cast<std::uint64_t>(st.step_index)));
            a = policy_sample(policy, obs, step_rng).action;
        }
        return Action{{a[0], a[1]}};
    };
    return evaluate_actor(actor, spec, episodes, seed);
}

double eval_left_route_fraction(const GaussianPolicy& policy, const RunningNormalizer& norm,
                                const EnvSpec& spec, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw ContractError("eval_left_route_fraction: episodes must be >= 1");
    int left = 0, counted = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        const std::uint64_t ep_seed = Rng::mix(seed, 0x70D0 + static_cast<std::uint64_t>(ep));
        EnvState st = env_reset(spec, ep_seed);
        std::vector<double> xs;
        while (true) {
            const std::vector<double> obs = norm.normalized(observe(st));
            const std::vector<double> a = policy_mean(policy, obs);
            StepResult r = env_step(spec, st, Action{{a[0], a[1]}});
            xs.push_back(r.next.position.x);
            st = r.next;
            if (r.transition.done) break;
        }
        if (!xs.empty()) {
            ++counted;
            if (xs[xs.size() / 2] < 0.5) ++left;
        }
    }
    return counted ? static_cast<double>(left) / counted : 0.0;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(RunConfig cfg, DemoDataset demos)
    : cfg_(std::move(cfg)), env_(EnvSpec::make(cfg_.env)), demos_(std::move(demos)),
      rng_(cfg_.seed) {
    validate_config(cfg_);
    if (demos_.state_dim != EnvSpec::kObsDim || demos_.action_dim != EnvSpec::kActionDim) {
        throw ContractError("Trainer: demo dims do not match the environment");
    }
    if (demos_.num_records() == 0) throw ContractError("Trainer: empty demo dataset");

    teacher_ = FmTeacher(EnvSpec::kObsDim, EnvSpec::kActionDim,
                         static_cast<std::size_t>(cfg_.discrim_depth),
                         static_cast<std::size_t>(cfg_.discrim_num_unit), cfg_.noise_scale, rng_);
    policy_ = GaussianPolicy(EnvSpec::kObsDim, EnvSpec::kActionDim, 64, rng_);
    value_net_ = make_value_net(EnvSpec::kObsDim, 64, rng_);
    head_ = RewardHead{cfg_.temperature, cfg_.expert_loss_rate, cfg_.agent_loss_rate};
    opt_teacher_ = std::make_unique<Adam>(teacher_.vnet.params(), cfg_.disc_lr);
    opt_policy_ = std::make_unique<Adam>(policy_.params(), cfg_.student_lr);
    opt_value_ = std::make_unique<Adam>(value_net_.params(), cfg_.student_lr);
    norm_ = RunningNormalizer(EnvSpec::kObsDim);
    buffer_.obs_dim = EnvSpec::kObsDim;
    buffer_.act_dim = EnvSpec::kActionDim;

    env_state_ = env_reset(env_, Rng::mix(cfg_.seed, 0xE0 + episode_counter_));
    ++episode_counter_;

    if (cfg_.teacher_warmstart_steps > 0) {
        const RunningNormalizer frozen = norm_;  // identity at this point
        for (int step = 0; step < cfg_.teacher_warmstart_steps; ++step) {
            const Tensor batch =
                expert_joint_batch(static_cast<std::size_t>(cfg_.disc_batch), frozen);
            Tape tape;
            MlpVars vars = teacher_.vnet.bind(tape);
            Var loss = cfm_loss_var(tape, teacher_, vars, batch, 1, rng_.next_u64());
            tape.backward(loss);
            opt_teacher_->step();
        }
    }
    reward_teacher_ = teacher_;
}

void Trainer::collect_rollout(const RunningNormalizer& frozen) {
    buffer_.clear();
    episodes_done_ = 0;
    episodes_succeeded_ = 0;
    finished_return_sum_ = 0.0;

    raw_obs_.clear();
    const std::size_t n = static_cast<std::size_t>(cfg_.steps_per_iter);
    for (std::size_t k = 0; k < n; ++k) {
        const auto raw = observe(env_state_);
        raw_obs_.insert(raw_obs_.end(), raw.begin(), raw.end());
        const std::vector<double> obs = frozen.normalized(raw);
        const SampleResult s = policy_sample(policy_, obs, rng_);
        StepResult r = env_step(env_, env_state_, Action{{s.action[0], s.action[1]}});

        buffer_.obs.insert(buffer_.obs.end(), obs.begin(), obs.end());
        buffer_.raw_action.insert(buffer_.raw_action.end(), s.action.begin(), s.action.end());
        buffer_.exec_action.insert(buffer_.exec_action.end(), r.transition.action.v.begin(),
                                   r.transition.action.v.end());
        buffer_.log_prob.push_back(s.log_prob);
        buffer_.done.push_back(r.transition.done ? 1 : 0);
        buffer_.success.push_back(r.transition.success ? 1 : 0);
        buffer_.diag_reward.push_back(r.transition.diag_env_reward());

        episode_return_ += buffer_.diag_reward.back();
        env_steps_ += 1;
        if (r.transition.done) {
            ++episodes_done_;
            if (r.transition.success) ++episodes_succeeded_;
            finished_return_sum_ += episode_return_;
            episode_return_ = 0.0;
            env_state_ = env_reset(env_, Rng::mix(cfg_.seed, 0xE0 + episode_counter_));
            ++episode_counter_;
        } else {
            env_state_ = r.next;
        }
    }

    // Values for GAE, batched over the rollout plus the bootstrap state.
    buffer_.value.resize(n);
    {
        Tensor obs_all({n, buffer_.obs_dim}, buffer_.obs);
        std::vector<double> out(n), scratch;
        value_net_.apply(obs_all.data.data(), n, out.data(), scratch);
        buffer_.value = out;
        if (buffer_.done.back()) {
            buffer_.bootstrap_value = 0.0;
        } else {
            const std::vector<double> last_obs = frozen.normalized(observe(env_state_));
            Tensor last({1, buffer_.obs_dim}, last_obs);
            buffer_.bootstrap_value = value_net_.apply(last).data[0];
        }
    }
}

void Trainer::relabel_rewards(const RunningNormalizer& frozen) {
    const std::size_t n = buffer_.size();
    buffer_.learned_reward.resize(n);
    if (cfg_.use_env_reward) {
        // PPO-sanity mode: the firewall is deliberately lifted.
        buffer_.learned_reward = buffer_.diag_reward;
        return;
    }
    (void)frozen;  // observations in the buffer are already normalized
    Tensor joint({n, teacher_.joint_dim()});
    for (std::size_t i = 0; i < n; ++i) {
        double* row = joint.data.data() + i * teacher_.joint_dim();
        std::copy(buffer_.obs.begin() + i * buffer_.obs_dim,
                  buffer_.obs.begin() + (i + 1) * buffer_.obs_dim, row);
        std::copy(buffer_.exec_action.begin() + i * buffer_.act_dim,
                  buffer_.exec_action.begin() + (i + 1) * buffer_.act_dim,
                  row + buffer_.obs_dim);
    }
    std::vector<double> dist1, dist0;
    estimate_dist_pair(reward_teacher_, joint, cfg_.num_samples,
                       Rng::mix(cfg_.seed, 0x3E3A0 + static_cast<std::uint64_t>(iter_)), dist1,
                       dist0);
    for (std::size_t i = 0; i < n; ++i) {
        buffer_.learned_reward[i] = airl_reward(dist1[i], dist0[i], cfg_.temperature);
    }
}

Tensor Trainer::expert_joint_batch(std::size_t rows, const RunningNormalizer& frozen) {
    Tensor out({rows, teacher_.joint_dim()});
    std::vector<double> norm_state(demos_.state_dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t i = rng_.uniform_below(demos_.num_records());
        frozen.normalize(std::span<const double>(demos_.state_row(i), demos_.state_dim),
                         norm_state);
        double* row = out.data.data() + r * teacher_.joint_dim();
        std::copy(norm_state.begin(), norm_state.end(), row);
        std::copy(demos_.action_row(i), demos_.action_row(i) + demos_.action_dim,
                  row + demos_.state_dim);
    }
    return out;
}

Tensor Trainer::agent_joint_batch(std::size_t rows) {
    Tensor out({rows, teacher_.joint_dim()});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t i = rng_.uniform_below(buffer_.size());
        double* row = out.data.data() + r * teacher_.joint_dim();
        std::copy(buffer_.obs.begin() + i * buffer_.obs_dim,
                  buffer_.obs.begin() + (i + 1) * buffer_.obs_dim, row);
        std::copy(buffer_.exec_action.begin() + i * buffer_.act_dim,
                  buffer_.exec_action.begin() + (i + 1) * buffer_.act_dim,
                  row + buffer_.obs_dim);
    }
    return out;
}

IterationMetrics Trainer::train_iteration() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunningNormalizer frozen = norm_;  // one transform for the whole iteration

    // (1) rollout with the current policy
    collect_rollout(frozen);

    // Firewall window: from here to the end of the teacher update, the
    // diagnostic env reward must not be read (unless deliberately lifted).
    const std::uint64_t diag_reads_before = diag_reward_reads();

    // (2) reward relabeling, gated by reward_update_freq
    if (iter_ % std::max(1, cfg_.reward_update_freq) == 0) reward_teacher_ = teacher_;
    relabel_rewards(frozen);

    // (3) student update (GAE + PPO + action distillation)
    const GaeResult gae = gae_advantages(buffer_, cfg_.gamma, cfg_.gae_lambda);
    Tensor distill_targets;
    const Tensor* targets_ptr = nullptr;
    if (cfg_.beta > 0.0 && !cfg_.use_env_reward) {
        Tensor states({buffer_.size(), buffer_.obs_dim}, buffer_.obs);
        distill_targets =
            generate_actions(teacher_, states, cfg_.fm_num_steps,
                             Rng::mix(cfg_.seed, 0xD15711 + static_cast<std::uint64_t>(iter_)));
        targets_ptr = &distill_targets;
    }
    RunConfig update_cfg = cfg_;
    if (cfg_.use_env_reward) update_cfg.beta = 0.0;  // sanity mode is pure PPO
    const UpdateStats ustats = ppo_update(policy_, value_net_, *opt_policy_, *opt_value_,
                                          buffer_, gae, targets_ptr, update_cfg, rng_);

    // (4) teacher update: expert minibatch from the demos, agent minibatch
    // from the fresh rollout
    DiscStepStats dstats;
    if (!cfg_.use_env_reward) {
        for (int u = 0; u < cfg_.disc_updates; ++u) {
            const std::size_t rows = static_cast<std::size_t>(cfg_.disc_batch);
            const Tensor expert = expert_joint_batch(rows, frozen);
            const Tensor agent = agent_joint_batch(rows);
            dstats = disc_training_step(teacher_, head_, expert, agent, *opt_teacher_,
                                        rng_.next_u64());
        }
    }

    if (!cfg_.use_env_reward && diag_reward_reads() != diag_reads_before) {
        throw ContractError("train_iteration: diagnostic reward was read inside the update path");
    }

    // (5) normalizer update with the iteration's raw observations
    if (cfg_.state_norm) {
        norm_.update_rows(raw_obs_.data(), buffer_.size(), buffer_.obs_dim);
    }

    // (6) metrics
    IterationMetrics m;
    m.iter = iter_;
    m.steps = env_steps_;
    double mean_r = 0.0;
    for (double r : buffer_.learned_reward) mean_r += r;
    m.mean_reward = mean_r / static_cast<double>(buffer_.size());
    m.mean_return = episodes_done_ ? finished_return_sum_ / episodes_done_ : 0.0;
    m.success_rate = episodes_done_ ? static_cast<double>(episodes_succeeded_) / episodes_done_
                                    : 0.0;
    m.disc_loss_e = dstats.expert_loss;
    m.disc_loss_a = dstats.agent_loss;
    m.mean_d_e = dstats.mean_d_expert;
    m.mean_d_a = dstats.mean_d_agent;
    m.policy_loss = ustats.policy_loss;
    m.value_loss = ustats.value_loss;
    m.kl = ustats.kl;
    m.distill_loss = ustats.distill_loss;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++iter_;
    return m;
}

}  // namespace faopd
