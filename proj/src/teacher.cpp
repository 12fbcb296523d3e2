#include "faopd/teacher.hpp"

#include <cmath>

namespace faopd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* op) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": dim mismatch " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    }
}
}  // namespace

std::vector<double> ot_path_point(std::span<const double> x0, std::span<const double> x1,
                                  double t) {
    require_same_dim(x0, x1, "ot_path_point");
    if (!(t >= 0.0 && t <= 1.0)) {
        throw ContractError("ot_path_point: t=" + std::to_string(t) + " outside [0,1]");
    }
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * x0[i] + t * x1[i];
    return out;
}

std::vector<double> target_velocity(std::span<const double> x0, std::span<const double> x1) {
    require_same_dim(x0, x1, "target_velocity");
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x1[i] - x0[i];
    return out;
}

PathSample sample_path(std::vector<double> x0, std::vector<double> x1, double t) {
    PathSample p;
    p.x_t = ot_path_point(x0, x1, t);
    p.u = target_velocity(x0, x1);
    p.x0 = std::move(x0);
    p.x1 = std::move(x1);
    p.t = t;
    return p;
}

FmTeacher::FmTeacher(std::size_t state_dim_, std::size_t action_dim_, std::size_t depth,
                     std::size_t width, double noise_scale_, Rng& rng)
    : state_dim(state_dim_), action_dim(action_dim_), noise_scale(noise_scale_) {
    if (state_dim + action_dim == 0) throw DimensionError("FmTeacher: empty joint space");
    if (depth < 1 || width < 1) throw ContractError("FmTeacher: depth and width must be >= 1");
    if (noise_scale < 0.0) throw ContractError("FmTeacher: noise_scale must be >= 0");
    std::vector<std::size_t> widths;
    widths.push_back(input_dim());
    for (std::size_t i = 0; i < depth; ++i) widths.push_back(width);
    widths.push_back(joint_dim());
    vnet = Mlp(widths, rng);
}

void FmTeacher::fill_input_row(const double* x_t, double t, int cls, double* row) const {
    const std::size_t d = joint_dim();
    for (std::size_t i = 0; i < d; ++i) row[i] = x_t[i];
    row[d] = t;
    row[d + 1] = std::sin(kTwoPi * t);
    row[d + 2] = std::cos(kTwoPi * t);
    row[d + 3] = static_cast<double>(cls);
}

std::vector<PathSample> cfm_draws(const FmTeacher& teacher, const Tensor& x1_batch,
                                  std::uint64_t seed) {
    const std::size_t d = teacher.joint_dim();
    if (x1_batch.cols() != d) {
        throw DimensionError("cfm_draws: batch width " + std::to_string(x1_batch.cols()) +
                             " != joint dim " + std::to_string(d));
    }
    Rng rng(seed);
    std::vector<PathSample> out;
    out.reserve(x1_batch.rows());
    for (std::size_t r = 0; r < x1_batch.rows(); ++r) {
        const double t = rng.uniform();
        std::vector<double> x0(d);
        for (double& v : x0) v = teacher.noise_scale * rng.normal();
        std::vector<double> x1(x1_batch.data.begin() + r * d, x1_batch.data.begin() + (r + 1) * d);
        out.push_back(sample_path(std::move(x0), std::move(x1), t));
    }
    return out;
}

namespace {

struct CfmBatch {
    Tensor input;    // rows x input_dim
    Tensor targets;  // rows x joint_dim
};

CfmBatch make_cfm_batch(const FmTeacher& teacher, const Tensor& x1_batch, int cls,
                        std::uint64_t seed) {
    const auto draws = cfm_draws(teacher, x1_batch, seed);
    const std::size_t rows = draws.size();
    CfmBatch b{Tensor({rows, teacher.input_dim()}), Tensor({rows, teacher.joint_dim()})};
    for (std::size_t r = 0; r < rows; ++r) {
        teacher.fill_input_row(draws[r].x_t.data(), draws[r].t, cls,
                               b.input.data.data() + r * teacher.input_dim());
        std::copy(draws[r].u.begin(), draws[r].u.end(),
                  b.targets.data.begin() + r * teacher.joint_dim());
    }
    return b;
}

double mean_sq_row_error(const Tensor& pred, const Tensor& target) {
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.data[i] - target.data[i];
        total += diff * diff;
    }
    return total / static_cast<double>(pred.rows());
}

}  // namespace

double cfm_loss(const FmTeacher& teacher, const Tensor& x1_batch, int cls, std::uint64_t seed) {
    if (x1_batch.rows() == 0) throw ContractError("cfm_loss: empty batch");
    if (cls != 0 && cls != 1) throw ContractError("cfm_loss: class must be 0 or 1");
    const CfmBatch b = make_cfm_batch(teacher, x1_batch, cls, seed);
    const Tensor pred = teacher.vnet.apply(b.input);
    const double loss = mean_sq_row_error(pred, b.targets);
    if (!std::isfinite(loss)) throw NumericError("cfm_loss: non-finite loss");
    return loss;
}

Var cfm_loss_var(Tape& tape, const FmTeacher& teacher, const MlpVars& vars,
                 const Tensor& x1_batch, int cls, std::uint64_t seed) {
    if (x1_batch.rows() == 0) throw ContractError("cfm_loss_var: empty batch");
    if (cls != 0 && cls != 1) throw ContractError("cfm_loss_var: class must be 0 or 1");
    const CfmBatch b = make_cfm_batch(teacher, x1_batch, cls, seed);
    Var pred = teacher.vnet.forward(tape, vars, tape.constant(b.input));
    Var diff = tape.sub(pred, tape.constant(b.targets));
    return tape.mean(tape.row_sum(tape.square(diff)));
}

double estimate_dist(const FmTeacher& teacher, std::span<const double> x, int cls, int S,
                     std::uint64_t seed) {
    if (S < 1) throw ContractError("estimate_dist: S must be >= 1");
    if (cls != 0 && cls != 1) throw ContractError("estimate_dist: class must be 0 or 1");
    const std::size_t d = teacher.joint_dim();
    if (x.size() != d) {
        throw DimensionError("estimate_dist: point dim " + std::to_string(x.size()) +
                             " != joint dim " + std::to_string(d));
    }
    Rng rng(seed);
    Tensor input({static_cast<std::size_t>(S), teacher.input_dim()});
    Tensor targets({static_cast<std::size_t>(S), d});
    std::vector<double> x0(d), xt(d);
    for (int i = 0; i < S; ++i) {
        const double jitter = rng.uniform();
        const double t = (static_cast<double>(i) + jitter) / static_cast<double>(S);
        for (std::size_t k = 0; k < d; ++k) x0[k] = teacher.noise_scale * rng.normal();
        for (std::size_t k = 0; k < d; ++k) {
            xt[k] = (1.0 - t) * x0[k] + t * x[k];
            targets.data[i * d + k] = x[k] - x0[k];
        }
        teacher.fill_input_row(xt.data(), t, cls, input.data.data() + i * teacher.input_dim());
    }
    const Tensor pred = teacher.vnet.apply(input);
    const double v = mean_sq_row_error(pred, targets);
    if (!std::isfinite(v)) throw NumericError("estimate_dist: non-finite estimate");
    return v;
}

void estimate_dist_pair(const FmTeacher& teacher, const Tensor& X, int S, std::uint64_t seed,
                        std::vector<double>& dist1, std::vector<double>& dist0) {
    if (S < 1) throw ContractError("estimate_dist_pair: S must be >= 1");
    const std::size_t d = teacher.joint_dim();
    if (X.cols() != d) {
        throw DimensionError("estimate_dist_pair: width " + std::to_string(X.cols()) +
                             " != joint dim " + std::to_string(d));
    }
    const std::size_t n = X.rows();
    dist1.assign(n, 0.0);
    dist0.assign(n, 0.0);

    const std::size_t chunk_points = std::max<std::size_t>(1, 65536 / static_cast<std::size_t>(S));
    const std::size_t in_dim = teacher.input_dim();
    Tensor input({chunk_points * static_cast<std::size_t>(S), in_dim});
    Tensor targets({chunk_points * static_cast<std::size_t>(S), d});
    std::vector<double> out(chunk_points * static_cast<std::size_t>(S) * d);
    std::vector<double> scratch;
    std::vector<double> x0(d), xt(d);

    for (std::size_t base = 0; base < n; base += chunk_points) {
        const std::size_t m = std::min(chunk_points, n - base);
        const std::size_t rows = m * static_cast<std::size_t>(S);
        // One set of draws per point, shared across the two class passes.
        for (std::size_t p = 0; p < m; ++p) {
            Rng rng(Rng::mix(seed, base + p));
            const double* x = X.data.data() + (base + p) * d;
            for (int i = 0; i < S; ++i) {
                const double jitter = rng.uniform();
                const double t = (static_cast<double>(i) + jitter) / static_cast<double>(S);
                for (std::size_t k = 0; k < d; ++k) x0[k] = teacher.noise_scale * rng.normal();
                const std::size_t row = p * static_cast<std::size_t>(S) + i;
                for (std::size_t k = 0; k < d; ++k) {
                    xt[k] = (1.0 - t) * x0[k] + t * x[k];
                    targets.data[row * d + k] = x[k] - x0[k];
                }
                teacher.fill_input_row(xt.data(), t, 1, input.data.data() + row * in_dim);
            }
        }
        for (int cls = 1; cls >= 0; --cls) {
            if (cls == 0) {
                for (std::size_t row = 0; row < rows; ++row) {
                    input.data[row * in_dim + in_dim - 1] = 0.0;
                }
            }
            teacher.vnet.apply(input.data.data(), rows, out.data(), scratch);
            std::vector<double>& dist = cls == 1 ? dist1 : dist0;
            for (std::size_t p = 0; p < m; ++p) {
                double acc = 0.0;
                for (int i = 0; i < S; ++i) {
                    const std::size_t row = p * static_cast<std::size_t>(S) + i;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double diff = out[row * d + k] - targets.data[row * d + k];
                        acc += diff * diff;
                    }
                }
                const double v = acc / static_cast<double>(S);
                if (!std::isfinite(v)) throw NumericError("estimate_dist_pair: non-finite");
                dist[base + p] = v;
            }
        }
    }
}

Tensor generate_actions(const FmTeacher& teacher, const Tensor& states, int steps,
                        std::uint64_t seed, Tensor* final_joint) {
    if (steps < 1) throw ContractError("generate_action: steps must be >= 1");
    const std::size_t sd = teacher.state_dim, ad = teacher.action_dim, d = teacher.joint_dim();
    if (states.cols() != sd) {
        throw DimensionError("generate_actions: state width " + std::to_string(states.cols()) +
                             " != " + std::to_string(sd));
    }
    const std::size_t n = states.rows();
    Tensor joint({n, d});
    Tensor s0_noise({n, sd});
    for (std::size_t r = 0; r < n; ++r) {
        Rng rng(Rng::mix(seed, r));
        for (std::size_t k = 0; k < sd; ++k) {
            const double v = teacher.noise_scale * rng.normal();
            s0_noise.data[r * sd + k] = v;
            joint.data[r * d + k] = v;
        }
        for (std::size_t k = 0; k < ad; ++k) {
            joint.data[r * d + sd + k] = teacher.noise_scale * rng.normal();
        }
    }

    const std::size_t in_dim = teacher.input_dim();
    Tensor input({n, in_dim});
    std::vector<double> out(n * d), scratch;
    const double dt = 1.0 / static_cast<double>(steps);
    for (int k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        for (std::size_t r = 0; r < n; ++r) {
            // The state block rides the OT path from its own noise toward
            // the query state; the Euler update below still moves it, but
            // it is overwritten each step and clamped to s at the end.
            for (std::size_t c = 0; c < sd; ++c) {
                joint.data[r * d + c] =
                    (1.0 - t) * s0_noise.data[r * sd + c] + t * states.data[r * sd + c];
            }
            teacher.fill_input_row(joint.data.data() + r * d, t, 1,
                                   input.data.data() + r * in_dim);
        }
        teacher.vnet.apply(input.data.data(), n, out.data(), scratch);
        for (std::size_t i = 0; i < n * d; ++i) {
            joint.data[i] += dt * out[i];
            if (!std::isfinite(joint.data[i])) {
                throw NumericError("generate_action: non-finite intermediate at step " +
                                   std::to_string(k));
            }
        }
    }

    Tensor actions({n, ad});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < sd; ++c) joint.data[r * d + c] = states.data[r * sd + c];
        for (std::size_t c = 0; c < ad; ++c) actions.data[r * ad + c] = joint.data[r * d + sd + c];
    }
    if (final_joint) *final_joint = joint;
    return actions;
}

std::vector<double> generate_action(const FmTeacher& teacher, std::span<const double> state,
                                    int steps, std::uint64_t seed) {
    Tensor states({1, teacher.state_dim}, std::vector<double>(state.begin(), state.end()));
    const Tensor a = generate_actions(teacher, states, steps, seed);
    return a.data;
}

}  // namespace faopd
