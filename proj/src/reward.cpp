#include "faopd/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace faopd {

namespace {

double stable_sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_inputs(double dist1, double dist0, double temperature, const char* op) {
    if (!(temperature > 0.0)) {
        throw ContractError(std::string(op) + ": temperature must be > 0");
    }
    if (!std::isfinite(dist1) || !std::isfinite(dist0)) {
        throw NumericError(std::string(op) + ": non-finite Dist input");
    }
}

// Differentiable per-row Dist under one class for a shared draw set.
// Inputs and targets are constants; gradient reaches only the teacher.
Var dist_var(Tape& tape, const FmTeacher& teacher, const MlpVars& vars, const Tensor& input,
             const Tensor& targets) {
    Var pred = teacher.vnet.forward(tape, vars, tape.constant(input));
    return tape.row_sum(tape.square(tape.sub(pred, tape.constant(targets))));
}

struct DrawnBatch {
    Tensor input_c1;  // rows x input_dim, class column = 1
    Tensor input_c0;  // same rows, class column = 0
    Tensor targets;   // rows x joint_dim
};

DrawnBatch draw_batch(const FmTeacher& teacher, const Tensor& batch, Rng& rng) {
    const std::size_t d = teacher.joint_dim(), in_dim = teacher.input_dim();
    const std::size_t n = batch.rows();
    DrawnBatch out{Tensor({n, in_dim}), Tensor({n, in_dim}), Tensor({n, d})};
    std::vector<double> x0(d), xt(d);
    for (std::size_t r = 0; r < n; ++r) {
        const double t = rng.uniform();
        const double* x = batch.data.data() + r * d;
        for (std::size_t k = 0; k < d; ++k) x0[k] = teacher.noise_scale * rng.normal();
        for (std::size_t k = 0; k < d; ++k) {
            xt[k] = (1.0 - t) * x0[k] + t * x[k];
            out.targets.data[r * d + k] = x[k] - x0[k];
        }
        teacher.fill_input_row(xt.data(), t, 1, out.input_c1.data.data() + r * in_dim);
        teacher.fill_input_row(xt.data(), t, 0, out.input_c0.data.data() + r * in_dim);
    }
    return out;
}

}  // namespace

double discriminator_prob(double dist1, double dist0, double temperature) {
    check_inputs(dist1, dist0, temperature, "discriminator_prob");
    const double d = stable_sigmoid((dist0 - dist1) / temperature);
    // Keep the output strictly inside (0,1) even where the sigmoid
    // saturates in double precision.
    const double hi = std::nextafter(1.0, 0.0);
    return std::min(std::max(d, std::numeric_limits<double>::min()), hi);
}

double airl_reward(double dist1, double dist0, double temperature) {
    check_inputs(dist1, dist0, temperature, "airl_reward");
    return (dist0 - dist1) / temperature;
}

DiscLossBuild disc_loss_var(Tape& tape, const FmTeacher& teacher, const MlpVars& vars,
                            const RewardHead& head, const Tensor& expert_batch,
                            const Tensor& agent_batch, std::uint64_t seed) {
    if (expert_batch.rows() == 0 || agent_batch.rows() == 0) {
        throw ContractError("disc_loss: both batches must be nonempty");
    }
    if (expert_batch.cols() != teacher.joint_dim() || agent_batch.cols() != teacher.joint_dim()) {
        throw DimensionError("disc_loss: batch width != joint dim");
    }
    if (!(head.temperature > 0.0)) {
        throw ContractError("disc_loss: temperature must be > 0");
    }

    Rng rng(seed);
    const DrawnBatch e = draw_batch(teacher, expert_batch, rng);
    const DrawnBatch a = draw_batch(teacher, agent_batch, rng);
    const double inv_tau = 1.0 / head.temperature;

    // z = (Dist0 - Dist1)/tau per row; D = sigmoid(z).
    DiscLossBuild b;
    b.z_expert = tape.scale(tape.sub(dist_var(tape, teacher, vars, e.input_c0, e.targets),
                                     dist_var(tape, teacher, vars, e.input_c1, e.targets)),
                            inv_tau);
    b.z_agent = tape.scale(tape.sub(dist_var(tape, teacher, vars, a.input_c0, a.targets),
                                    dist_var(tape, teacher, vars, a.input_c1, a.targets)),
                           inv_tau);

    // -log D = softplus(-z), -log(1-D) = softplus(z).
    b.loss_expert = tape.mean(tape.softplus(tape.neg(b.z_expert)));
    b.loss_agent = tape.mean(tape.softplus(b.z_agent));
    b.loss = tape.add(tape.scale(b.loss_expert, head.expert_loss_rate),
                      tape.scale(b.loss_agent, std::abs(head.agent_loss_rate)));
    return b;
}

DiscStepStats disc_training_step(FmTeacher& teacher, const RewardHead& head,
                                 const Tensor& expert_batch, const Tensor& agent_batch,
                                 Adam& optimizer, std::uint64_t seed) {
    Tape tape;
    MlpVars vars = teacher.vnet.bind(tape);
    const DiscLossBuild b =
        disc_loss_var(tape, teacher, vars, head, expert_batch, agent_batch, seed);

    DiscStepStats stats;
    stats.expert_loss = tape.scalar_value(b.loss_expert);
    stats.agent_loss = tape.scalar_value(b.loss_agent);
    for (double z : tape.value(b.z_expert).data) stats.mean_d_expert += stable_sigmoid(z);
    for (double z : tape.value(b.z_agent).data) stats.mean_d_agent += stable_sigmoid(z);
    stats.mean_d_expert /= static_cast<double>(expert_batch.rows());
    stats.mean_d_agent /= static_cast<double>(agent_batch.rows());

    tape.backward(b.loss);
    optimizer.step();
    return stats;
}

DiscStepStats disc_eval(const FmTeacher& teacher, const RewardHead& head,
                        const Tensor& expert_batch, const Tensor& agent_batch, int samples,
                        std::uint64_t seed) {
    std::vector<double> d1, d0;
    DiscStepStats stats;
    estimate_dist_pair(teacher, expert_batch, samples, seed, d1, d0);
    for (std::size_t i = 0; i < d1.size(); ++i) {
        const double d = discriminator_prob(d1[i], d0[i], head.temperature);
        stats.mean_d_expert += d;
        stats.expert_loss += -std::log(d);
    }
    stats.mean_d_expert /= static_cast<double>(d1.size());
    stats.expert_loss /= static_cast<double>(d1.size());
    estimate_dist_pair(teacher, agent_batch, samples, Rng::mix(seed, 1), d1, d0);
    for (std::size_t i = 0; i < d1.size(); ++i) {
        const double d = discriminator_prob(d1[i], d0[i], head.temperature);
        stats.mean_d_agent += d;
        stats.agent_loss += -std::log1p(-d);
    }
    stats.mean_d_agent /= static_cast<double>(d1.size());
    stats.agent_loss /= static_cast<double>(d1.size());
    return stats;
}

}  // namespace faopd
