#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "faopd/mlp.hpp"
#include "faopd/tensor.hpp"

namespace faopd {

// One draw on the straight-line probability path between a noise point x0
// and a data point x1: x_t = (1-t) x0 + t x1, with time-constant target
// velocity u = x1 - x0.
struct PathSample {
    std::vector<double> x0;
    std::vector<double> x1;
    double t = 0.0;
    std::vector<double> x_t;
    std::vector<double> u;
};

std::vector<double> ot_path_point(std::span<const double> x0, std::span<const double> x1,
                                  double t);
std::vector<double> target_velocity(std::span<const double> x0, std::span<const double> x1);
PathSample sample_path(std::vector<double> x0, std::vector<double> x1, double t);

// Class-conditional velocity field over the joint vector x = (s, a).
// Input layout per row: [x_t | t, sin(2*pi*t), cos(2*pi*t) | c]; output is a
// joint-dim velocity. c=1 models the expert occupancy, c=0 the agent's.
struct FmTeacher {
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    double noise_scale = 0.5;  // stddev of x0 draws
    Mlp vnet;

    FmTeacher() = default;
    FmTeacher(std::size_t state_dim, std::size_t action_dim, std::size_t depth,
              std::size_t width, double noise_scale, Rng& rng);

    std::size_t joint_dim() const { return state_dim + action_dim; }
    std::size_t input_dim() const { return joint_dim() + 4; }

    void fill_input_row(const double* x_t, double t, int cls, double* row) const;
};

// Deterministic draw list used by the CFM loss: per batch row, t ~ U[0,1]
// and x0 ~ N(0, noise_scale^2 I), in stream order.
std::vector<PathSample> cfm_draws(const FmTeacher& teacher, const Tensor& x1_batch,
                                  std::uint64_t seed);

// Mean over the batch of |v(x_t, t | c) - (x1 - x0)|^2; value-only path.
double cfm_loss(const FmTeacher& teacher, const Tensor& x1_batch, int cls, std::uint64_t seed);

// Differentiable version of the same quantity (identical value for the same
// seed); vars must be teacher.vnet bound to the tape.
Var cfm_loss_var(Tape& tape, const FmTeacher& teacher, const MlpVars& vars,
                 const Tensor& x1_batch, int cls, std::uint64_t seed);

// Monte-Carlo estimate of the per-point conditional FM loss at joint point
// x: stratified t_i = (i + jitter)/S, x0 ~ N(0, noise_scale^2 I). This is
// the likelihood proxy driving both discriminator and reward; no gradients.
double estimate_dist(const FmTeacher& teacher, std::span<const double> x, int cls, int S,
                     std::uint64_t seed);

// Batched pair scorer: Dist(row | c=1) and Dist(row | c=0) for every row of
// X (rows x joint_dim), reusing one set of draws per row across the two
// classes. Row r uses the stream Rng::mix(seed, r), so results equal
// per-row estimate_dist calls.
void estimate_dist_pair(const FmTeacher& teacher, const Tensor& X, int S, std::uint64_t seed,
                        std::vector<double>& dist1, std::vector<double>& dist0);

// Clamped-state Euler sampler: integrates the c=1 field over the joint
// space while pinning the state block to the OT path toward s; returns the
// action block. Row r draws its noise from Rng::mix(seed, r).
std::vector<double> generate_action(const FmTeacher& teacher, std::span<const double> state,
                                    int steps, std::uint64_t seed);
Tensor generate_actions(const FmTeacher& teacher, const Tensor& states, int steps,
                        std::uint64_t seed, Tensor* final_joint = nullptr);

}  // namespace faopd
