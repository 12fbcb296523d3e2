#pragma once

#include <cstdint>
#include <vector>

#include "faopd/rng.hpp"
#include "faopd/tensor.hpp"

namespace faopd {

// Parameter nodes of one Mlp registered on a tape. Bind once per tape and
// reuse across forwards so gradients from every call accumulate.
struct MlpVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

// Fully connected net, tanh on hidden layers, identity output.
// weights[i] has shape (widths[i], widths[i+1]); inputs are row batches.
struct Mlp {
    std::vector<std::size_t> widths;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    Mlp() = default;
    // Glorot-uniform weights, zero biases.
    Mlp(std::vector<std::size_t> layer_widths, Rng& rng);

    std::size_t in_dim() const { return widths.front(); }
    std::size_t out_dim() const { return widths.back(); }
    std::size_t param_count() const;

    MlpVars bind(Tape& tape);
    Var forward(Tape& tape, const MlpVars& vars, Var input) const;

    // Inference path without a tape. `in` is rows x in_dim row-major,
    // `out` must hold rows x out_dim. `scratch` is reused across calls.
    void apply(const double* in, std::size_t rows, double* out,
               std::vector<double>& scratch) const;
    Tensor apply(const Tensor& input) const;

    std::vector<Tensor*> params();
    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& flat);
};

}  // namespace faopd
