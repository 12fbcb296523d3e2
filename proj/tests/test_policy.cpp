#include "doctest.h"

#include <cmath>

#include "faopd/grad_check.hpp"
#include "faopd/policy.hpp"
#include "support/train_util.hpp"

using namespace faopd;
using namespace faopd::testsupport;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Synthetic on-policy buffer: random observations, actions sampled from the
// live policy (so recorded log-probs match), random learned rewards.
RolloutBuffer make_buffer(const GaussianPolicy& policy, const Mlp& value_net, std::size_t n,
                          Rng& rng) {
    RolloutBuffer b;
    b.obs_dim = policy.obs_dim();
    b.act_dim = policy.action_dim();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> obs(b.obs_dim);
        for (double& v : obs) v = rng.uniform(-1, 1);
        const SampleResult s = policy_sample(policy, obs, rng);
        b.obs.insert(b.obs.end(), obs.begin(), obs.end());
        b.raw_action.insert(b.raw_action.end(), s.action.begin(), s.action.end());
        b.exec_action.insert(b.exec_action.end(), s.action.begin(), s.action.end());
        b.log_prob.push_back(s.log_prob);
        b.learned_reward.push_back(rng.normal());
        b.done.push_back(i + 1 == n ? 1 : (rng.uniform() < 0.05 ? 1 : 0));
        b.diag_reward.push_back(0.0);
        b.success.push_back(0);
    }
    Tensor obs_all({n, b.obs_dim}, b.obs);
    const Tensor v = value_net.apply(obs_all);
    b.value = v.data;
    b.bootstrap_value = 0.0;
    return b;
}

// Forward-sum GAE oracle: A_k = sum_l (gamma lambda)^l delta_{k+l}, with the
// sum truncated at the first done.
std::vector<double> gae_oracle(const RolloutBuffer& b, double gamma, double lambda) {
    const std::size_t n = b.size();
    std::vector<double> delta(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double vnext = (k + 1 < n) ? b.value[k + 1] : b.bootstrap_value;
        delta[k] = b.learned_reward[k] + gamma * vnext * (b.done[k] ? 0.0 : 1.0) - b.value[k];
    }
    std::vector<double> adv(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double w = 1.0;
        for (std::size_t l = k; l < n; ++l) {
            adv[k] += w * delta[l];
            if (b.done[l]) break;
            w *= gamma * lambda;
        }
    }
    return adv;
}

}  // namespace

TEST_CASE("fresh policy has unit std componentwise") {
    Rng rng(1);
    GaussianPolicy p(4, 2, 64, rng);
    for (double ls : p.log_std.data) CHECK(std::exp(ls) == 1.0);
    CHECK(p.log_std.size() == 2);
    CHECK(p.mean_net.widths == std::vector<std::size_t>{4, 64, 64, 2});
}

TEST_CASE("sampled actions reproduce their recorded log-prob exactly") {
    Rng rng(2);
    GaussianPolicy p(3, 2, 16, rng);
    p.log_std = Tensor({1, 2}, {0.3, -0.4});
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> obs{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const SampleResult s = policy_sample(p, obs, rng);
        CHECK(std::abs(s.log_prob - policy_logprob(p, obs, s.action)) < 1e-12);
    }
}

TEST_CASE("standard normal peak log density") {
    Rng rng(3);
    GaussianPolicy p(2, 1, 8, rng);
    zero_net(p.mean_net);  // mu == 0
    const double lp = policy_logprob(p, std::vector<double>{0.5, -0.5}, std::vector<double>{0.0});
    CHECK(lp == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("log-prob at the mean is -sum(log sigma) - d/2 log 2pi") {
    Rng rng(4);
    GaussianPolicy p(2, 2, 8, rng);
    p.log_std = Tensor({1, 2}, {0.7, -1.1});
    const std::vector<double> obs{0.2, 0.8};
    const std::vector<double> mu = policy_mean(p, obs);
    const double expected = -(0.7 + -1.1) - kLog2Pi;
    CHECK(policy_logprob(p, obs, mu) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("2-dim log-prob factorizes into per-component terms") {
    Rng rng(5);
    GaussianPolicy p(2, 2, 8, rng);
    p.log_std = Tensor({1, 2}, {0.25, -0.5});
    const std::vector<double> obs{-0.3, 0.9};
    const std::vector<double> mu = policy_mean(p, obs);
    const std::vector<double> a{mu[0] + 0.4, mu[1] - 1.2};
    auto one_dim = [](double x, double m, double ls) {
        const double z = (x - m) / std::exp(ls);
        return -0.5 * z * z - ls - 0.5 * kLog2Pi;
    };
    const double expected = one_dim(a[0], mu[0], 0.25) + one_dim(a[1], mu[1], -0.5);
    CHECK(policy_logprob(p, obs, a) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gae: lambda = 0 collapses to one-step TD errors") {
    Rng rng(6);
    GaussianPolicy p(2, 1, 8, rng);
    Mlp v = make_value_net(2, 8, rng);
    RolloutBuffer b = make_buffer(p, v, 32, rng);
    const GaeResult g = gae_advantages(b, 0.9, 0.0);
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double vnext = (k + 1 < b.size()) ? b.value[k + 1] : b.bootstrap_value;
        const double delta =
            b.learned_reward[k] + 0.9 * vnext * (b.done[k] ? 0.0 : 1.0) - b.value[k];
        CHECK(g.raw_advantages[k] == doctest::Approx(delta).epsilon(1e-12));
    }
}

TEST_CASE("gae: gamma = lambda = 1, zero values, rewards (1,1,1) telescope to (3,2,1)") {
    RolloutBuffer b;
    b.obs_dim = 1;
    b.act_dim = 1;
    b.obs = {0, 0, 0};
    b.raw_action = {0, 0, 0};
    b.exec_action = {0, 0, 0};
    b.log_prob = {0, 0, 0};
    b.learned_reward = {1, 1, 1};
    b.value = {0, 0, 0};
    b.done = {0, 0, 1};
    b.diag_reward = {0, 0, 0};
    b.success = {0, 0, 0};
    const GaeResult g = gae_advantages(b, 1.0, 1.0);
    CHECK(g.raw_advantages == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(g.returns == std::vector<double>{3.0, 2.0, 1.0});
}

TEST_CASE("gae: 3-step worked example matches the direct recursion to 1e-12") {
    RolloutBuffer b;
    b.obs_dim = 1;
    b.act_dim = 1;
    b.obs = {0, 0, 0};
    b.raw_action = {0, 0, 0};
    b.exec_action = {0, 0, 0};
    b.log_prob = {0, 0, 0};
    b.learned_reward = {1.0, 0.0, 1.0};
    b.value = {0.5, 0.4, 0.3};
    b.done = {0, 0, 1};
    b.diag_reward = {0, 0, 0};
    b.success = {0, 0, 0};
    const double gamma = 0.99, lambda = 0.95;
    // Independent recursion, written out forwards.
    const double d2 = 1.0 - 0.3;
    const double d1 = 0.0 + gamma * 0.3 - 0.4;
    const double d0 = 1.0 + gamma * 0.4 - 0.5;
    const double a2 = d2;
    const double a1 = d1 + gamma * lambda * a2;
    const double a0 = d0 + gamma * lambda * a1;
    const GaeResult g = gae_advantages(b, gamma, lambda);
    CHECK(g.raw_advantages[0] == doctest::Approx(a0).epsilon(1e-12));
    CHECK(g.raw_advantages[1] == doctest::Approx(a1).epsilon(1e-12));
    CHECK(g.raw_advantages[2] == doctest::Approx(a2).epsilon(1e-12));
    CHECK(g.returns[1] == doctest::Approx(a1 + 0.4).epsilon(1e-12));
}

TEST_CASE("gae equals the forward-sum oracle on random buffers") {
    Rng rng(7);
    GaussianPolicy p(2, 1, 8, rng);
    Mlp v = make_value_net(2, 8, rng);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng.uniform_below(64);
        RolloutBuffer b = make_buffer(p, v, n, rng);
        b.bootstrap_value = b.done.back() ? 0.0 : rng.normal();
        const double gamma = rng.uniform(0.8, 1.0), lambda = rng.uniform(0.0, 1.0);
        const GaeResult g = gae_advantages(b, gamma, lambda);
        const std::vector<double> oracle = gae_oracle(b, gamma, lambda);
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(g.raw_advantages[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
        }
        // Normalization: zero mean, unit variance (up to the 1e-8 guard).
        double mean = 0.0;
        for (double a : g.advantages) mean += a;
        CHECK(std::abs(mean / static_cast<double>(n)) < 1e-9);
    }
    RolloutBuffer empty;
    CHECK_THROWS_AS(gae_advantages(empty, 0.99, 0.95), ContractError);
}

TEST_CASE("clipping invariance: ratios inside the clip window leave the surrogate unchanged") {
    Rng rng(8);
    GaussianPolicy p(3, 2, 16, rng);
    RolloutBuffer b = [&] {
        Mlp v = make_value_net(3, 8, rng);
        return make_buffer(p, v, 16, rng);
    }();
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    Tensor obs({16, 3}, b.obs);
    Tensor act({16, 2}, b.raw_action);
    Tensor old_lp({16, 1}, b.log_prob);
    Tensor adv({16, 1}, g.advantages);
    RunConfig clipped;
    clipped.clip_eps = 0.2;
    clipped.beta = 0.0;
    RunConfig unclipped = clipped;
    unclipped.clip_eps = 1e9;
    double v1, v2;
    {
        Tape tape;
        MlpVars vars = p.mean_net.bind(tape);
        Var ls = tape.param(p.log_std);
        const auto parts =
            build_policy_loss(tape, p, vars, ls, obs, act, old_lp, adv, nullptr, nullptr, clipped);
        // Sampled actions at the sampling parameters: every ratio is 1.
        for (double r : tape.value(parts.ratio).data) CHECK(std::abs(r - 1.0) < 1e-9);
        v1 = tape.scalar_value(parts.loss);
    }
    {
        Tape tape;
        MlpVars vars = p.mean_net.bind(tape);
        Var ls = tape.param(p.log_std);
        const auto parts = build_policy_loss(tape, p, vars, ls, obs, act, old_lp, adv, nullptr,
                                             nullptr, unclipped);
        v2 = tape.scalar_value(parts.loss);
    }
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
}

TEST_CASE("ratio-1 update: policy loss is beta*distill - c_ent*entropy") {
    Rng rng(9);
    GaussianPolicy p(3, 2, 16, rng);
    Mlp v = make_value_net(3, 16, rng);
    RolloutBuffer b = make_buffer(p, v, 64, rng);
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    Tensor targets({64, 2});
    for (double& t : targets.data) t = rng.uniform(-1, 1);

    RunConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch = 64;  // one minibatch == the whole batch, ratios are 1
    cfg.beta = 2.0;
    cfg.entropy_coef = 0.05;
    Adam op(p.params(), cfg.student_lr), ov(v.params(), cfg.student_lr);
    Rng update_rng(100);
    const UpdateStats st = ppo_update(p, v, op, ov, b, g, &targets, cfg, update_rng);
    // Normalized advantages have zero mean, so the surrogate vanishes at
    // ratio 1 and the remaining terms are exactly the penalty and bonus.
    CHECK(st.policy_loss ==
          doctest::Approx(cfg.beta * st.distill_loss - cfg.entropy_coef * st.entropy)
              .epsilon(1e-9));
    CHECK(st.clip_fraction == 0.0);
}

TEST_CASE("beta = 0 reduces to pure reward distillation (no distill term)") {
    Rng rng(10);
    GaussianPolicy p(3, 2, 16, rng);
    Mlp v = make_value_net(3, 16, rng);
    RolloutBuffer b = make_buffer(p, v, 64, rng);
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    RunConfig cfg;
    cfg.epochs = 2;
    cfg.minibatch = 32;
    cfg.beta = 0.0;
    Adam op(p.params(), cfg.student_lr), ov(v.params(), cfg.student_lr);
    Rng update_rng(200);
    const UpdateStats st = ppo_update(p, v, op, ov, b, g, nullptr, cfg, update_rng);
    CHECK(st.distill_loss == 0.0);
}

TEST_CASE("one full update keeps mean KL(old||new) below 0.05") {
    Rng rng(11);
    GaussianPolicy p(4, 2, 64, rng);
    Mlp v = make_value_net(4, 64, rng);
    RolloutBuffer b = make_buffer(p, v, 256, rng);
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    RunConfig cfg;  // defaults: 10 epochs, lr 1e-4, clip 0.2
    cfg.minibatch = 64;
    cfg.beta = 0.0;
    Adam op(p.params(), cfg.student_lr), ov(v.params(), cfg.student_lr);
    Rng update_rng(300);
    const UpdateStats st = ppo_update(p, v, op, ov, b, g, nullptr, cfg, update_rng);
    CHECK(st.kl >= 0.0);
    CHECK(st.kl < 0.05);
}

TEST_CASE("entropy bonus gradient reaches the global log-std vector") {
    Rng rng(12);
    GaussianPolicy p(2, 2, 8, rng);
    Mlp v = make_value_net(2, 8, rng);
    zero_net(v);
    // Constant rewards with done everywhere: raw advantages are constant,
    // so normalized advantages vanish and only the entropy term drives
    // log_std.
    RolloutBuffer b;
    b.obs_dim = 2;
    b.act_dim = 2;
    const std::size_t n = 32;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> obs{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const SampleResult s = policy_sample(p, obs, rng);
        b.obs.insert(b.obs.end(), obs.begin(), obs.end());
        b.raw_action.insert(b.raw_action.end(), s.action.begin(), s.action.end());
        b.exec_action.insert(b.exec_action.end(), s.action.begin(), s.action.end());
        b.log_prob.push_back(s.log_prob);
        b.learned_reward.push_back(1.0);
        b.value.push_back(0.0);
        b.done.push_back(1);
        b.diag_reward.push_back(0.0);
        b.success.push_back(0);
    }
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    for (double a : g.advantages) CHECK(a == 0.0);

    RunConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch = 32;
    cfg.beta = 0.0;
    cfg.entropy_coef = 0.01;
    const std::vector<double> before = p.log_std.data;
    Adam op(p.params(), cfg.student_lr), ov(v.params(), cfg.student_lr);
    Rng update_rng(400);
    (void)ppo_update(p, v, op, ov, b, g, nullptr, cfg, update_rng);
    for (std::size_t j = 0; j < before.size(); ++j) {
        CHECK(p.log_std.data[j] > before[j]);  // maximizing entropy raises sigma
    }
}

TEST_CASE("action distillation: rigged mean net reproducing the target gives zero loss") {
    Rng rng(13);
    GaussianPolicy p(1, 1, 8, rng);
    zero_net(p.mean_net);
    FmTeacher t(1, 1, 1, 8, 0.0, rng);  // sigma = 0: generation is deterministic
    zero_net(t.vnet);                    // zero field keeps the action block at 0
    Tensor states({5, 1}, {0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(action_distill_loss(p, t, states, 10, 1, /*mean_mode=*/true) == 0.0);
}

TEST_CASE("action distillation: 1-dim gap of 0.2 costs 0.04") {
    Rng rng(14);
    GaussianPolicy p(1, 1, 8, rng);
    zero_net(p.mean_net);
    p.mean_net.biases.back() = Tensor({1, 1}, {0.3});  // mu == 0.3 everywhere
    FmTeacher t(1, 1, 1, 8, 0.0, rng);
    zero_net(t.vnet);
    t.vnet.biases.back() = Tensor({1, 2}, {0.0, 0.5});  // integrates to action 0.5
    Tensor states({4, 1}, {0.0, 0.25, 0.5, 0.75});
    const double loss = action_distill_loss(p, t, states, 100, 1, /*mean_mode=*/true);
    CHECK(loss == doctest::Approx(0.04).epsilon(1e-9));
}

TEST_CASE("grad_check: distillation penalty, and its mean-output gradient formula") {
    Rng rng(15);
    GaussianPolicy p(2, 2, 8, rng);
    zero_net(p.mean_net);
    p.mean_net.biases.back() = Tensor({1, 2}, {0.1, -0.2});
    const std::size_t n = 6;
    Tensor obs({n, 2});
    Tensor targets({n, 2});
    Tensor eps({n, 2});
    for (double& v : obs.data) v = rng.uniform(-1, 1);
    for (double& v : targets.data) v = rng.uniform(-1, 1);
    for (double& v : eps.data) v = rng.normal();
    RunConfig cfg;
    cfg.beta = 1.0;
    cfg.entropy_coef = 0.0;
    Tensor act({n, 2});   // ratio block fed zeros; advantages zero it out
    Tensor old_lp({n, 1});
    Tensor adv({n, 1});

    auto fn = [&](std::span<const double> x, std::vector<double>* grad_out) {
        std::vector<double> flat(x.begin(), x.end());
        p.mean_net.set_flat_params(std::vector<double>(flat.begin(), flat.end() - 2));
        p.log_std.data = {flat[flat.size() - 2], flat[flat.size() - 1]};
        Tape tape;
        MlpVars vars = p.mean_net.bind(tape);
        Var ls = tape.param(p.log_std);
        const auto parts =
            build_policy_loss(tape, p, vars, ls, obs, act, old_lp, adv, &targets, &eps, cfg);
        const double v = tape.scalar_value(parts.loss);
        if (grad_out) {
            tape.backward(parts.loss);
            grad_out->clear();
            for (Tensor* q : p.mean_net.params())
                grad_out->insert(grad_out->end(), q->grad.begin(), q->grad.end());
            grad_out->insert(grad_out->end(), p.log_std.grad.begin(), p.log_std.grad.end());
        }
        return v;
    };
    std::vector<double> point = p.mean_net.flat_params();
    point.insert(point.end(), p.log_std.data.begin(), p.log_std.data.end());
    CHECK(grad_check(fn, point) < 1e-4);

    // With a zeroed body the only path from mu to the loss is the final
    // bias, whose gradient must be 2 mean(a_pi - a_G) per component.
    std::vector<double> grads;
    (void)fn(point, &grads);
    std::vector<double> expected(2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const double a_pi = p.mean_net.biases.back().data[j] +
                                std::exp(p.log_std.data[j]) * eps.data[i * 2 + j];
            expected[j] += 2.0 * (a_pi - targets.data[i * 2 + j]) / static_cast<double>(n);
        }
    }
    // Final-layer bias grads sit just before the log_std entries.
    const std::size_t bias_off = grads.size() - 2 - 2;
    CHECK(grads[bias_off] == doctest::Approx(expected[0]).epsilon(1e-9));
    CHECK(grads[bias_off + 1] == doctest::Approx(expected[1]).epsilon(1e-9));
}

TEST_CASE("grad_check: full PPO surrogate at frozen ratios on a 4-transition batch") {
    Rng rng(16);
    GaussianPolicy p(2, 1, 6, rng);
    Mlp v = make_value_net(2, 6, rng);
    RolloutBuffer b = make_buffer(p, v, 4, rng);
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    Tensor obs({4, 2}, b.obs);
    Tensor act({4, 1}, b.raw_action);
    Tensor old_lp({4, 1}, b.log_prob);
    Tensor adv({4, 1}, g.advantages);
    Tensor targets({4, 1}, {0.1, -0.1, 0.2, 0.0});
    Tensor eps({4, 1}, {0.3, -0.2, 0.5, 0.1});
    RunConfig cfg;
    cfg.beta = 0.5;
    cfg.entropy_coef = 0.01;

    auto fn = [&](std::span<const double> x, std::vector<double>* grad_out) {
        std::vector<double> flat(x.begin(), x.end());
        p.mean_net.set_flat_params(std::vector<double>(flat.begin(), flat.end() - 1));
        p.log_std.data = {flat.back()};
        Tape tape;
        MlpVars vars = p.mean_net.bind(tape);
        Var ls = tape.param(p.log_std);
        const auto parts =
            build_policy_loss(tape, p, vars, ls, obs, act, old_lp, adv, &targets, &eps, cfg);
        const double value = tape.scalar_value(parts.loss);
        if (grad_out) {
            tape.backward(parts.loss);
            grad_out->clear();
            for (Tensor* q : p.mean_net.params())
                grad_out->insert(grad_out->end(), q->grad.begin(), q->grad.end());
            grad_out->insert(grad_out->end(), p.log_std.grad.begin(), p.log_std.grad.end());
        }
        return value;
    };
    std::vector<double> point = p.mean_net.flat_params();
    point.push_back(p.log_std.data[0]);
    CHECK(grad_check(fn, point) < 1e-4);
}

TEST_CASE("ppo_update contract errors") {
    Rng rng(17);
    GaussianPolicy p(2, 1, 8, rng);
    Mlp v = make_value_net(2, 8, rng);
    RolloutBuffer b = make_buffer(p, v, 8, rng);
    const GaeResult g = gae_advantages(b, 0.99, 0.95);
    RunConfig cfg;
    Adam op(p.params(), 1e-4), ov(v.params(), 1e-4);
    Rng update_rng(1);
    CHECK_THROWS_AS(ppo_update(p, v, op, ov, b, g, nullptr, cfg, update_rng), ContractError);

    RolloutBuffer empty;
    empty.obs_dim = 2;
    empty.act_dim = 1;
    CHECK_THROWS_AS(ppo_update(p, v, op, ov, empty, g, nullptr, cfg, update_rng), ContractError);
}
