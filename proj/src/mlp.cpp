#include "faopd/mlp.hpp"

#include <Eigen/Core>

#include <cmath>

namespace faopd {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

Mlp::Mlp(std::vector<std::size_t> layer_widths, Rng& rng) : widths(std::move(layer_widths)) {
    if (widths.size() < 2) throw DimensionError("Mlp: need at least input and output width");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t fan_in = widths[i], fan_out = widths[i + 1];
        Tensor w({fan_in, fan_out});
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w.data) v = rng.uniform(-limit, limit);
        weights.push_back(std::move(w));
        biases.push_back(Tensor({1, fan_out}));
    }
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) n += widths[i] * widths[i + 1] + widths[i + 1];
    return n;
}

MlpVars Mlp::bind(Tape& tape) {
    MlpVars v;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        v.weights.push_back(tape.param(weights[i]));
        v.biases.push_back(tape.param(biases[i]));
    }
    return v;
}

Var Mlp::forward(Tape& tape, const MlpVars& vars, Var input) const {
    if (tape.value(input).cols() != in_dim()) {
        throw DimensionError("Mlp::forward: input width " +
                             std::to_string(tape.value(input).cols()) + " != " +
                             std::to_string(in_dim()));
    }
    Var h = input;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        h = tape.add_row(tape.matmul(h, vars.weights[i]), vars.biases[i]);
        if (i + 1 < weights.size()) h = tape.tanh(h);
    }
    return h;
}

void Mlp::apply(const double* in, std::size_t rows, double* out,
                std::vector<double>& scratch) const {
    std::size_t max_width = 0;
    for (std::size_t w : widths) max_width = std::max(max_width, w);
    scratch.resize(2 * rows * max_width);
    double* buf_a = scratch.data();
    double* buf_b = scratch.data() + rows * max_width;

    const double* src = in;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::size_t ni = widths[i], no = widths[i + 1];
        const bool last = i + 1 == weights.size();
        double* dst = last ? out : (src == buf_a ? buf_b : buf_a);
        Eigen::Map<EMat> y(dst, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(no));
        y.noalias() = Eigen::Map<const EMat>(src, static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(ni)) *
                      Eigen::Map<const EMat>(weights[i].data.data(), static_cast<Eigen::Index>(ni),
                                             static_cast<Eigen::Index>(no));
        y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(biases[i].data.data(),
                                                            static_cast<Eigen::Index>(no));
        if (!last) {
            for (std::size_t k = 0; k < rows * no; ++k) dst[k] = std::tanh(dst[k]);
        }
        src = dst;
    }
}

Tensor Mlp::apply(const Tensor& input) const {
    if (input.cols() != in_dim()) {
        throw DimensionError("Mlp::apply: input width " + std::to_string(input.cols()) + " != " +
                             std::to_string(in_dim()));
    }
    Tensor out({input.rows(), out_dim()});
    std::vector<double> scratch;
    apply(input.data.data(), input.rows(), out.data.data(), scratch);
    out.check_finite("Mlp::apply");
    return out;
}

std::vector<Tensor*> Mlp::params() {
    std::vector<Tensor*> ps;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        ps.push_back(&weights[i]);
        ps.push_back(&biases[i]);
    }
    return ps;
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        flat.insert(flat.end(), weights[i].data.begin(), weights[i].data.end());
        flat.insert(flat.end(), biases[i].data.begin(), biases[i].data.end());
    }
    return flat;
}

void Mlp::set_flat_params(const std::vector<double>& flat) {
    if (flat.size() != param_count()) {
        throw DimensionError("Mlp::set_flat_params: got " + std::to_string(flat.size()) +
                             " values, expected " + std::to_string(param_count()));
    }
    std::size_t off = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        std::copy(flat.begin() + off, flat.begin() + off + weights[i].size(),
                  weights[i].data.begin());
        off += weights[i].size();
        std::copy(flat.begin() + off, flat.begin() + off + biases[i].size(),
                  biases[i].data.begin());
        off += biases[i].size();
    }
}

}  // namespace faopd
