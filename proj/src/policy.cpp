#include "faopd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace faopd {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

GaussianPolicy::GaussianPolicy(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden,
                               Rng& rng)
    : mean_net({obs_dim, hidden, hidden, action_dim}, rng), log_std({1, action_dim}) {}

std::vector<Tensor*> GaussianPolicy::params() {
    std::vector<Tensor*> ps = mean_net.params();
    ps.push_back(&log_std);
    return ps;
}

Mlp make_value_net(std::size_t obs_dim, std::size_t hidden, Rng& rng) {
    return Mlp({obs_dim, hidden, hidden, 1}, rng);
}

SampleResult policy_sample(const GaussianPolicy& policy, std::span<const double> obs, Rng& rng) {
    const std::vector<double> mu = policy_mean(policy, obs);
    SampleResult out;
    out.action.resize(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        out.action[j] = mu[j] + std::exp(policy.log_std.data[j]) * rng.normal();
    }
    // Same density expression as policy_logprob, on the precomputed mean.
    double lp = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double ls = policy.log_std.data[j];
        const double z = (out.action[j] - mu[j]) / std::exp(ls);
        lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
    }
    out.log_prob = lp;
    return out;
}

std::vector<double> policy_mean(const GaussianPolicy& policy, std::span<const double> obs) {
    if (obs.size() != policy.obs_dim()) {
        throw DimensionError("policy: obs dim " + std::to_string(obs.size()) + " != " +
                             std::to_string(policy.obs_dim()));
    }
    Tensor in({1, obs.size()}, std::vector<double>(obs.begin(), obs.end()));
    return policy.mean_net.apply(in).data;
}

double policy_logprob(const GaussianPolicy& policy, std::span<const double> obs,
                      std::span<const double> action) {
    if (action.size() != policy.action_dim()) {
        throw DimensionError("policy_logprob: action dim mismatch");
    }
    const std::vector<double> mu = policy_mean(policy, obs);
    double lp = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double ls = policy.log_std.data[j];
        const double z = (action[j] - mu[j]) / std::exp(ls);
        lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
    }
    return lp;
}

double policy_entropy(const GaussianPolicy& policy) {
    double h = 0.0;
    for (double ls : policy.log_std.data) h += ls + 0.5 * (kLog2Pi + 1.0);
    return h;
}

void RolloutBuffer::clear() {
    obs.clear();
    raw_action.clear();
    exec_action.clear();
    log_prob.clear();
    learned_reward.clear();
    value.clear();
    done.clear();
    diag_reward.clear();
    success.clear();
    bootstrap_value = 0.0;
}

GaeResult gae_advantages(const RolloutBuffer& buffer, double gamma, double lambda) {
    const std::size_t n = buffer.size();
    if (n == 0) throw ContractError("gae_advantages: empty buffer");
    if (buffer.value.size() != n || buffer.learned_reward.size() != n ||
        buffer.done.size() != n) {
        throw ContractError("gae_advantages: buffer arrays out of sync");
    }
    GaeResult g;
    g.raw_advantages.resize(n);
    g.returns.resize(n);
    double next_adv = 0.0;
    for (std::size_t idx = n; idx-- > 0;) {
        const double not_done = buffer.done[idx] ? 0.0 : 1.0;
        const double next_value = (idx + 1 < n) ? buffer.value[idx + 1] : buffer.bootstrap_value;
        const double delta = buffer.learned_reward[idx] + gamma * next_value * not_done -
                             buffer.value[idx];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        g.raw_advantages[idx] = next_adv;
        g.returns[idx] = next_adv + buffer.value[idx];
    }
    double mean = 0.0;
    for (double a : g.raw_advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : g.raw_advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    g.advantages.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.advantages[i] = (g.raw_advantages[i] - mean) * inv_std;
    return g;
}

namespace {

Tensor rows_subset(const std::vector<double>& flat, std::size_t width,
                   const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
    Tensor out({hi - lo, width});
    for (std::size_t i = lo; i < hi; ++i) {
        std::copy(flat.begin() + idx[i] * width, flat.begin() + (idx[i] + 1) * width,
                  out.data.begin() + (i - lo) * width);
    }
    return out;
}

Tensor col_subset(const std::vector<double>& flat, const std::vector<std::size_t>& idx,
                  std::size_t lo, std::size_t hi) {
    Tensor out({hi - lo, 1});
    for (std::size_t i = lo; i < hi; ++i) out.data[i - lo] = flat[idx[i]];
    return out;
}

}  // namespace

PolicyLossParts build_policy_loss(Tape& tape, const GaussianPolicy& policy,
                                  const MlpVars& mean_vars, Var log_std_var, const Tensor& obs,
                                  const Tensor& actions, const Tensor& old_logp,
                                  const Tensor& advantages, const Tensor* distill_targets,
                                  const Tensor* distill_eps, const RunConfig& cfg) {
    const std::size_t ad = policy.action_dim();
    const double act_const = 0.5 * static_cast<double>(ad) * kLog2Pi;
    PolicyLossParts parts;

    Var mu = policy.mean_net.forward(tape, mean_vars, tape.constant(obs));

    // log pi(a|s) = -sum (a-mu)^2/(2 sigma^2) - sum log sigma - d/2 log 2pi
    Var sq = tape.square(tape.sub(tape.constant(actions), mu));
    Var inv_two_var = tape.scale(tape.exp(tape.scale(log_std_var, -2.0)), 0.5);
    Var quad = tape.row_sum(tape.mul_row(sq, inv_two_var));
    Var sum_ls = tape.sum(log_std_var);
    Var logp = tape.shift(tape.neg(tape.add_scalar(quad, sum_ls)), -act_const);

    parts.ratio = tape.exp(tape.sub(logp, tape.constant(old_logp)));
    Var adv_c = tape.constant(advantages);
    Var surr = tape.min(tape.mul(parts.ratio, adv_c),
                        tape.mul(tape.clamp(parts.ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps),
                                 adv_c));
    parts.loss = tape.neg(tape.mean(surr));

    parts.entropy = tape.shift(tape.sum(log_std_var),
                               0.5 * static_cast<double>(ad) * (kLog2Pi + 1.0));
    if (cfg.entropy_coef > 0.0) {
        parts.loss = tape.sub(parts.loss, tape.scale(parts.entropy, cfg.entropy_coef));
    }

    if (cfg.beta > 0.0) {
        if (!distill_targets) throw ContractError("build_policy_loss: missing distill targets");
        Var a_pi = mu;
        if (!cfg.distill_mean_mode) {
            if (!distill_eps) throw ContractError("build_policy_loss: missing distill noise");
            Var sigma = tape.exp(log_std_var);
            a_pi = tape.add(mu, tape.mul_row(tape.constant(*distill_eps), sigma));
        }
        Var dl = tape.mean(
            tape.row_sum(tape.square(tape.sub(a_pi, tape.constant(*distill_targets)))));
        parts.distill_value = tape.scalar_value(dl);
        parts.loss = tape.add(parts.loss, tape.scale(dl, cfg.beta));
    }
    return parts;
}

UpdateStats ppo_update(GaussianPolicy& policy, Mlp& value_net, Adam& opt_policy, Adam& opt_value,
                       const RolloutBuffer& buffer, const GaeResult& gae,
                       const Tensor* distill_targets, const RunConfig& cfg, Rng& rng) {
    const std::size_t n = buffer.size();
    if (n == 0) throw ContractError("ppo_update: empty buffer");
    if (gae.advantages.size() != n) throw ContractError("ppo_update: advantages not computed");
    if (cfg.beta > 0.0 && distill_targets == nullptr) {
        throw ContractError("ppo_update: beta > 0 requires distill targets");
    }
    const std::size_t od = buffer.obs_dim, ad = buffer.act_dim;
    const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n);

    UpdateStats stats;
    std::size_t steps = 0;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(idx);
        for (std::size_t lo = 0; lo < n; lo += mb) {
            const std::size_t hi = std::min(lo + mb, n);
            const std::size_t rows = hi - lo;
            const Tensor obs = rows_subset(buffer.obs, od, idx, lo, hi);
            const Tensor act = rows_subset(buffer.raw_action, ad, idx, lo, hi);
            const Tensor old_lp = col_subset(buffer.log_prob, idx, lo, hi);
            const Tensor adv = col_subset(gae.advantages, idx, lo, hi);
            const Tensor ret = col_subset(gae.returns, idx, lo, hi);

            {
                Tensor tgt, eps;
                const Tensor* tgt_ptr = nullptr;
                const Tensor* eps_ptr = nullptr;
                if (cfg.beta > 0.0) {
                    tgt = rows_subset(distill_targets->data, ad, idx, lo, hi);
                    tgt_ptr = &tgt;
                    if (!cfg.distill_mean_mode) {
                        eps = Tensor({rows, ad});
                        for (double& v : eps.data) v = rng.normal();
                        eps_ptr = &eps;
                    }
                }
                Tape tape;
                MlpVars mean_vars = policy.mean_net.bind(tape);
                Var log_std = tape.param(policy.log_std);
                const PolicyLossParts parts =
                    build_policy_loss(tape, policy, mean_vars, log_std, obs, act, old_lp, adv,
                                      tgt_ptr, eps_ptr, cfg);

                stats.policy_loss += tape.scalar_value(parts.loss);
                stats.entropy += tape.scalar_value(parts.entropy);
                stats.distill_loss += parts.distill_value;
                const auto& rvals = tape.value(parts.ratio).data;
                double clipped = 0.0;
                for (double r : rvals) {
                    if (std::abs(r - 1.0) > cfg.clip_eps) clipped += 1.0;
                }
                stats.clip_fraction += clipped / static_cast<double>(rows);

                tape.backward(parts.loss);
                std::vector<Tensor*> pparams = policy.params();
                clip_grad_norm(pparams, cfg.grad_clip);
                opt_policy.step();
            }
            {
                Tape tape;
                MlpVars value_vars = value_net.bind(tape);
                Var v = value_net.forward(tape, value_vars, tape.constant(obs));
                Var vloss = tape.mean(tape.square(tape.sub(v, tape.constant(ret))));
                stats.value_loss += tape.scalar_value(vloss);
                tape.backward(vloss);
                std::vector<Tensor*> vparams = value_net.params();
                clip_grad_norm(vparams, cfg.grad_clip);
                opt_value.step();
            }
            ++steps;
        }
    }
    const double inv_steps = 1.0 / static_cast<double>(steps);
    stats.policy_loss *= inv_steps;
    stats.value_loss *= inv_steps;
    stats.entropy *= inv_steps;
    stats.distill_loss *= inv_steps;
    stats.clip_fraction *= inv_steps;

    // KL(old || new) estimated as mean(ratio - 1 - log ratio) on the buffer.
    double kl = 0.0;
    std::vector<double> mu_all(n * ad);
    {
        Tensor obs_all({n, od}, buffer.obs);
        std::vector<double> scratch;
        policy.mean_net.apply(obs_all.data.data(), n, mu_all.data(), scratch);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double lp = 0.0;
        for (std::size_t j = 0; j < ad; ++j) {
            const double ls = policy.log_std.data[j];
            const double z = (buffer.raw_action[i * ad + j] - mu_all[i * ad + j]) / std::exp(ls);
            lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
        }
        const double log_ratio = lp - buffer.log_prob[i];
        kl += std::exp(log_ratio) - 1.0 - log_ratio;
    }
    stats.kl = kl / static_cast<double>(n);
    if (!std::isfinite(stats.kl)) throw NumericError("ppo_update: non-finite KL");
    return stats;
}

double action_distill_loss(const GaussianPolicy& policy, const FmTeacher& teacher,
                           const Tensor& states, int fm_steps, std::uint64_t seed,
                           bool mean_mode) {
    const std::size_t n = states.rows(), ad = policy.action_dim();
    const Tensor targets = generate_actions(teacher, states, fm_steps, seed);
    std::vector<double> mu(n * ad), scratch;
    policy.mean_net.apply(states.data.data(), n, mu.data(), scratch);
    Rng rng(Rng::mix(seed, 0xE5));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ad; ++j) {
            double a = mu[i * ad + j];
            if (!mean_mode) a += std::exp(policy.log_std.data[j]) * rng.normal();
            const double diff = a - targets.data[i * ad + j];
            total += diff * diff;
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace faopd
