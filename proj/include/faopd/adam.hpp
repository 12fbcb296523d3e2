#pragma once

#include <vector>

#include "faopd/tensor.hpp"

namespace faopd {

// Bias-corrected Adam over a fixed parameter group. Moment buffers are laid
// out per parameter tensor and must stay in sync with it.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::vector<Tensor*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    // Applies one update using each parameter's .grad. Throws ContractError
    // if a gradient is missing or mismatched, NumericError on NaN/Inf.
    void step();

    long step_count() const { return step_; }
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long step_ = 0;
};

// L2 norm over all gradients of the group.
double grad_norm(const std::vector<Tensor*>& params);

// Scales gradients down so their global norm is at most max_norm.
void clip_grad_norm(const std::vector<Tensor*>& params, double max_norm);

}  // namespace faopd
