#include "faopd/adam.hpp"

#include <cmath>

namespace faopd {

Adam::Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Tensor* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        if (p.grad.size() != p.data.size()) {
            throw ContractError("Adam::step: gradient length mismatch for parameter " +
                                std::to_string(i));
        }
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < p.data.size(); ++k) {
            const double g = p.grad[k];
            if (!std::isfinite(g)) throw NumericError("Adam::step: non-finite gradient");
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p.data[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            if (!std::isfinite(p.data[k])) throw NumericError("Adam::step: non-finite parameter");
        }
    }
}

double grad_norm(const std::vector<Tensor*>& params) {
    double sq = 0.0;
    for (const Tensor* p : params) {
        for (double g : p->grad) sq += g * g;
    }
    return std::sqrt(sq);
}

void clip_grad_norm(const std::vector<Tensor*>& params, double max_norm) {
    const double n = grad_norm(params);
    if (n > max_norm && n > 0.0) {
        const double s = max_norm / n;
        for (Tensor* p : params) {
            for (double& g : p->grad) g *= s;
        }
    }
}

}  // namespace faopd
